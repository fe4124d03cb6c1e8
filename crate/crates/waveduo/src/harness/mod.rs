//! Experiment orchestration: the reference case catalog, run execution with
//! sampled energy observation, persistence (energy/profile CSVs plus a TOML
//! manifest), plot-script emission, and a small parallel catalog runner.

mod manifest;
mod plots;

pub use manifest::{
    read_manifest, write_manifest, ArtifactPaths, DerivedQuantities, RunManifest, Timing,
    MANIFEST_FORMAT_VERSION,
};
pub use plots::emit_plots;

use crate::analysis::{classify, AnalysisError, DecaySeries, DecayThresholds};
use crate::energy::{compute_energy, dissipation_residual, EnergyRecord, Summation};
use crate::model::{
    parse_profile, sample_profile, GridSpec, InitialSelector, ModelError, PhysicalConfig,
};
use crate::scheme::{first_step, run, LevelView, SchemeError, StepMode, TimeSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{row}: {reason}")]
    Csv { path: PathBuf, row: usize, reason: String },
    #[error("{path}: {reason}")]
    BadManifest { path: PathBuf, reason: String },
    #[error("invalid experiment: {0}")]
    BadSpec(String),
    #[error(
        "dissipation identity violated at step {step}: residual {residual:e} exceeds {bound:e}"
    )]
    DissipationViolation { step: u64, residual: f64, bound: f64 },
    #[error("case '{name}' failed: {source}")]
    CaseFailed {
        name: String,
        #[source]
        source: Box<HarnessError>,
    },
}

impl HarnessError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// Whether the failure is numerical (instability, dissipation breach)
    /// rather than a validation or I/O problem.
    pub fn is_runtime(&self) -> bool {
        match self {
            HarnessError::Scheme(SchemeError::Instability { .. }) => true,
            HarnessError::DissipationViolation { .. } => true,
            HarnessError::CaseFailed { source, .. } => source.is_runtime(),
            _ => false,
        }
    }

    /// Whether the failure is a filesystem problem. Malformed *content*
    /// (CSV rows, manifest fields) counts as validation instead, so that a
    /// bad-but-readable file exits 1 while an unreadable path exits 3.
    pub fn is_io(&self) -> bool {
        match self {
            HarnessError::Io { .. } => true,
            HarnessError::CaseFailed { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

/// Recording stride: either automatic (about 10^4 rows per run) or a fixed
/// number of steps between energy records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Stride {
    Auto,
    Every(u64),
}

impl Stride {
    /// The concrete stride for a run of `steps` steps.
    pub fn effective(&self, steps: u64) -> u64 {
        match self {
            Stride::Auto => ((steps as f64 / 1e4).ceil() as u64).max(1),
            Stride::Every(k) => *k,
        }
    }
}

impl Default for Stride {
    fn default() -> Self {
        Stride::Auto
    }
}

impl std::fmt::Display for Stride {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stride::Auto => f.write_str("auto"),
            Stride::Every(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for Stride {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Stride::Auto);
        }
        match s.parse::<u64>() {
            Ok(k) if k >= 1 => Ok(Stride::Every(k)),
            _ => Err(format!("stride must be 'auto' or a positive integer, got '{s}'")),
        }
    }
}

impl TryFrom<String> for Stride {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Stride> for String {
    fn from(s: Stride) -> String {
        s.to_string()
    }
}

/// A fully described experiment: physics, discretization, initial data,
/// recording, and step-path selection. Serializes to the manifest's `[spec]`
/// table and round-trips losslessly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub a: f64,
    pub n: usize,
    pub t_final: f64,
    pub cfl_factor: f64,
    #[serde(rename = "b")]
    pub b_spec: String,
    #[serde(rename = "c")]
    pub c_spec: String,
    #[serde(default)]
    pub initial: InitialSelector,
    #[serde(default)]
    pub stride: Stride,
    #[serde(default)]
    pub mode: StepMode,
    #[serde(default)]
    pub check_dissipation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl ExperimentSpec {
    /// A spec with the catalog defaults: N=100, cfl_factor=1, reference
    /// initial data, automatic stride, constant-folded step path.
    pub fn new(name: &str, a: f64, b_spec: &str, c_spec: &str, t_final: f64) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            a,
            n: 100,
            t_final,
            cfl_factor: 1.0,
            b_spec: b_spec.to_string(),
            c_spec: c_spec.to_string(),
            initial: InitialSelector::Default,
            stride: Stride::Auto,
            mode: StepMode::ClosedForm,
            check_dissipation: false,
            comment: None,
        }
    }
}

/// Everything an experiment needs at runtime, derived from its spec.
pub struct Elaborated {
    pub config: PhysicalConfig,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub stride: u64,
}

/// Validates a spec and derives the runtime objects.
pub fn elaborate(spec: &ExperimentSpec) -> Result<Elaborated, HarnessError> {
    if spec.name.is_empty()
        || spec.name.starts_with('.')
        || !spec.name.chars().all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch))
    {
        return Err(HarnessError::BadSpec(format!(
            "name '{}' must be non-empty, not start with '.', and use only [A-Za-z0-9._-]",
            spec.name
        )));
    }
    if !spec.t_final.is_finite() || spec.t_final < 0.0 {
        return Err(HarnessError::BadSpec(format!(
            "t_final must be finite and nonnegative, got {}",
            spec.t_final
        )));
    }
    let grid = GridSpec::new(spec.n)?;
    let b = parse_profile(&spec.b_spec)?;
    let c = parse_profile(&spec.c_spec)?;
    let config = PhysicalConfig::new(spec.a, b, c)?;
    let time = TimeSpec::new(spec.a, &grid, spec.t_final, spec.cfl_factor)?;
    let stride = spec.stride.effective(time.steps());
    Ok(Elaborated { config, grid, time, stride })
}

/// The reference experiment catalog: one conservation case, three
/// equal-speed damped cases at T=500, and three coupling/damping layouts at
/// each unequal speed (a=2, a=0.5) with both the long T=500000 horizon and a
/// short T=500 variant. All on N=100 with cfl_factor 1.
pub fn reference_catalog() -> Vec<ExperimentSpec> {
    let mut cases = vec![
        ExperimentSpec::new("b3-c1-a1", 1.0, "b3", "c1", 500.0),
        ExperimentSpec::new("b4-c3-a1", 1.0, "b4", "c3", 500.0),
        ExperimentSpec::new("b4-c5-a1", 1.0, "b4", "c5", 500.0),
        ExperimentSpec::new("b5-c4-a1", 1.0, "b5", "c4", 500.0),
    ];
    for (a, tag) in [(2.0, "a2"), (0.5, "a05")] {
        for (b, c) in [("b4", "c3"), ("b4", "c5"), ("b5", "c4")] {
            let name = format!("{b}-{c}-{tag}");
            let mut long = ExperimentSpec::new(&name, a, b, c, 500000.0);
            let mut short = ExperimentSpec::new(&format!("{name}-short"), a, b, c, 500.0);
            if b == "b5" && a == 2.0 {
                let note = "In the reference figure set this case's caption names the b4/c5 \
                            profiles while the surrounding text says b5/c4; this entry follows \
                            the text."
                    .to_string();
                long.comment = Some(note.clone());
                short.comment = Some(note);
            }
            cases.push(long);
            cases.push(short);
        }
    }
    cases
}

const ENERGY_CSV_HEADER: &str =
    "t,E,E_ku,E_pu,E_ky,E_py,neg_lnE_over_t,t_times_E,neg_lnE_over_lnt";
const PROFILE_CSV_HEADER: &str = "x,u,y";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn energy_csv_text(records: &[EnergyRecord], series: &DecaySeries) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(ENERGY_CSV_HEADER);
    out.push('\n');
    for (rec, s) in records.iter().zip(series.samples()) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            rec.t,
            rec.e_total,
            rec.e_ku,
            rec.e_pu,
            rec.e_ky,
            rec.e_py,
            fmt_opt(s.d1),
            s.d2,
            fmt_opt(s.d3),
        ));
    }
    out
}

fn profile_csv_text(grid: &GridSpec, u: &[f64], y: &[f64]) -> String {
    let mut out = String::with_capacity(32 * (grid.node_count() + 1));
    out.push_str(PROFILE_CSV_HEADER);
    out.push('\n');
    for j in 0..grid.node_count() {
        out.push_str(&format!("{},{},{}\n", grid.node(j), u[j], y[j]));
    }
    out
}

/// Reads the (t, E) columns back out of an energy CSV written by
/// [`run_experiment`] (or any file in the same format).
pub fn read_energy_csv(path: &Path) -> Result<Vec<(f64, f64)>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == ENERGY_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(HarnessError::Csv {
                path: path.to_path_buf(),
                row: 1,
                reason: format!("unexpected header '{header}'"),
            })
        }
        None => {
            return Err(HarnessError::Csv {
                path: path.to_path_buf(),
                row: 1,
                reason: "empty file".to_string(),
            })
        }
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let row = i + 1;
        let mut fields = line.split(',');
        let bad = |what: &str| HarnessError::Csv {
            path: path.to_path_buf(),
            row,
            reason: what.to_string(),
        };
        let t: f64 = fields
            .next()
            .ok_or_else(|| bad("missing t field"))?
            .parse()
            .map_err(|_| bad("unparseable t field"))?;
        let e: f64 = fields
            .next()
            .ok_or_else(|| bad("missing E field"))?
            .parse()
            .map_err(|_| bad("unparseable E field"))?;
        if fields.count() != 7 {
            return Err(bad("expected 9 comma-separated fields"));
        }
        points.push((t, e));
    }
    if points.is_empty() {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            row: 1,
            reason: "no data rows".to_string(),
        });
    }
    Ok(points)
}

/// Executes one experiment into `out_root/<name>/`: runs the scheme with an
/// energy observer at the requested stride, classifies the recorded series, and
/// writes `energy.csv`, `profile_initial.csv`, `profile_final.csv`, and
/// `manifest.toml`. With `check_dissipation` set, energy is evaluated at
/// every step (regardless of stride) and the per-step balance is enforced to
/// 1e-12 * max(E0, 1).
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_root: &Path,
) -> Result<RunManifest, HarnessError> {
    let started = std::time::Instant::now();
    let elab = elaborate(spec)?;
    let dir = out_root.join(&spec.name);
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;

    let grid = elab.grid;
    let time = elab.time;
    let a = elab.config.a;
    let dx = grid.dx();
    let dt = time.dt();
    let c_samples = sample_profile(&elab.config.c, &grid);
    let init = spec.initial.data();
    let sampled = init.sample(&grid)?;

    let mut records: Vec<EnergyRecord> = Vec::new();
    let mut max_residual: Option<f64> = None;
    let bound = {
        // E0 from the virtual first step, to anchor the dissipation bound.
        let (u1, y1) = first_step(&sampled,
            &sample_profile(&elab.config.b, &grid), &c_samples, a, dx, dt);
        let ghost_u: Vec<f64> =
            u1.iter().zip(&sampled.u1).map(|(un, v)| un - 2.0 * dt * v).collect();
        let ghost_y: Vec<f64> =
            y1.iter().zip(&sampled.y1).map(|(yn, v)| yn - 2.0 * dt * v).collect();
        let view = LevelView {
            n: 0,
            t: 0.0,
            u_prev: &ghost_u,
            u_curr: &sampled.u0,
            u_next: &u1,
            y_prev: &ghost_y,
            y_curr: &sampled.y0,
            y_next: &y1,
        };
        let rec0 = compute_energy(&view, dx, dt, a, &c_samples, Summation::Sequential);
        if time.steps() == 0 {
            records.push(rec0);
        }
        1e-12 * rec0.e_total.max(1.0)
    };

    let final_state;
    if time.steps() == 0 {
        final_state = run(&elab.config, &grid, &time, &init, spec.mode, 1, |_| {})?;
    } else if spec.check_dissipation {
        let mut prev: Option<EnergyRecord> = None;
        let mut worst = 0.0f64;
        let mut violation: Option<(u64, f64)> = None;
        let stride = elab.stride;
        let steps = time.steps();
        final_state = run(&elab.config, &grid, &time, &init, spec.mode, 1, |view| {
            let rec = compute_energy(&view, dx, dt, a, &c_samples, Summation::Sequential);
            if let Some(p) = &prev {
                let r = dissipation_residual(&rec, p).expect("stride-1 records");
                let r = r.abs();
                worst = worst.max(r);
                if r > bound && violation.is_none() {
                    violation = Some((rec.n, r));
                }
            }
            if rec.n % stride == 0 || rec.n == steps - 1 {
                records.push(rec);
            }
            prev = Some(rec);
        })?;
        if let Some((step, residual)) = violation {
            return Err(HarnessError::DissipationViolation { step, residual, bound });
        }
        max_residual = Some(worst);
    } else {
        final_state = run(&elab.config, &grid, &time, &init, spec.mode, elab.stride, |view| {
            records.push(compute_energy(&view, dx, dt, a, &c_samples, Summation::Sequential));
        })?;
    }

    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.e_total)).collect();
    let series = DecaySeries::from_energy(&points)?;
    let report = classify(&series, &DecayThresholds::default());

    let energy_csv = dir.join("energy.csv");
    write_text(&energy_csv, &energy_csv_text(&records, &series))?;
    let initial_csv = dir.join("profile_initial.csv");
    write_text(&initial_csv, &profile_csv_text(&grid, &sampled.u0, &sampled.y0))?;
    let final_csv = dir.join("profile_final.csv");
    write_text(
        &final_csv,
        &profile_csv_text(&grid, &final_state.u_curr, &final_state.y_curr),
    )?;

    let manifest = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION.to_string(),
        spec: spec.clone(),
        derived: DerivedQuantities {
            dx,
            dt,
            lambda: time.lambda(),
            steps: time.steps(),
            stride: elab.stride,
            records: records.len() as u64,
            e_first: records[0].e_total,
            e_last: records[records.len() - 1].e_total,
            max_dissipation_residual: max_residual,
        },
        report,
        artifacts: ArtifactPaths {
            energy_csv: "energy.csv".to_string(),
            profile_initial_csv: "profile_initial.csv".to_string(),
            profile_final_csv: "profile_final.csv".to_string(),
        },
        timing: Timing { wall_seconds: started.elapsed().as_secs_f64() },
    };
    write_manifest(&dir.join("manifest.toml"), &manifest)?;
    Ok(manifest)
}

/// Simple glob matching with `*` (any substring) and `?` (any one char).
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let t: Vec<char> = text.chars().collect();
    // Classic two-pointer with backtracking over the last `*`.
    let (mut pi, mut ti) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

/// Outcome of one catalog case.
pub struct CatalogRun {
    pub spec: ExperimentSpec,
    pub manifest: RunManifest,
}

/// Runs catalog entries (optionally filtered to the T=500 short set and/or
/// by a name glob) on a bounded worker pool, emitting plots for each. The
/// first failure in catalog order is returned after in-flight cases finish;
/// no new cases start once a failure is seen.
pub fn run_catalog(
    out_root: &Path,
    only: Option<&str>,
    workers: usize,
    short_only: bool,
) -> Result<Vec<CatalogRun>, HarnessError> {
    let cases: Vec<ExperimentSpec> = reference_catalog()
        .into_iter()
        .filter(|s| !short_only || s.t_final <= 500.0)
        .filter(|s| only.map(|pat| glob_match(pat, &s.name)).unwrap_or(true))
        .collect();
    if cases.is_empty() {
        return Err(HarnessError::BadSpec(match only {
            Some(pat) => format!("no catalog case matches '{pat}'"),
            None => "no catalog cases selected".to_string(),
        }));
    }

    let workers = workers.max(1).min(cases.len());
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Vec<Mutex<Option<Result<RunManifest, HarnessError>>>> =
        (0..cases.len()).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cases.len() || abort.load(Ordering::SeqCst) {
                    return;
                }
                let outcome = run_experiment(&cases[i], out_root)
                    .and_then(|m| emit_plots(&out_root.join(&cases[i].name)).map(|_| m));
                if outcome.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut runs = Vec::with_capacity(cases.len());
    for (case, cell) in cases.iter().zip(results) {
        match cell.into_inner().unwrap() {
            Some(Ok(manifest)) => runs.push(CatalogRun { spec: case.clone(), manifest }),
            Some(Err(e)) => {
                return Err(HarnessError::CaseFailed {
                    name: case.name.clone(),
                    source: Box::new(e),
                })
            }
            // Skipped after an abort: report the earliest actual failure,
            // which a later cell holds; keep scanning.
            None => continue,
        }
    }
    Ok(runs)
}
