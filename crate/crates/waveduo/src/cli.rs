//! Command-line surface: one binary with `run`, `paper`, `analyze`, and
//! `list-cases` subcommands, all sharing the harness's elaboration and
//! validation path.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 on
//! validation errors (bad flags, bad physics, malformed CSV content), 2 on
//! numerical runtime failures (instability, per-step energy-balance breach),
//! 3 on filesystem I/O errors.

use crate::analysis::{classify, Classification, DecayReport, DecayThresholds};
use crate::harness::{
    glob_match, read_energy_csv, reference_catalog, run_catalog, run_experiment, CatalogRun,
    ExperimentSpec, HarnessError, Stride,
};
use crate::model::{parse_profile, CoefficientProfile};
use crate::scheme::StepMode;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

/// Output root used when a command does not get an explicit `--out`.
pub const OUT_ENV: &str = "WAVEDUO_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "waveduo",
    version,
    about = "Simulate and analyze a 1D pair of wave equations coupled through \
             velocities, with local damping acting on one component"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write energy/profile CSVs plus a manifest.
    Run(RunArgs),
    /// Run the reference experiment catalog into one directory per case.
    Paper(PaperArgs),
    /// Recompute the decay report offline from an energy CSV.
    Analyze(AnalyzeArgs),
    /// Print the reference catalog, one line per case.
    ListCases,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Wave speed of the damped (u) component; the other runs at speed 1.
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    /// Number of interior grid nodes.
    #[arg(long = "N", default_value_t = 100)]
    n: usize,
    /// Final time.
    #[arg(long = "T", allow_negative_numbers = true)]
    t_final: f64,
    /// Time-step safety factor in (0, 1]; 1 runs at the stability limit.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    cfl_factor: f64,
    /// Coupling profile: a catalog name (b1..b5) or an inline indicator
    /// such as "indicator:0.1-0.2,0.8-0.9@2.5".
    #[arg(long)]
    b: String,
    /// Damping profile: a catalog name (c1..c5) or an inline indicator.
    #[arg(long)]
    c: String,
    /// Steps between energy records: a positive integer or "auto"
    /// (about 10^4 records per run).
    #[arg(long, default_value = "auto")]
    stride: String,
    /// Step path: "closed-form" (folded coefficients) or "solve"
    /// (per-node 2x2 system).
    #[arg(long, default_value = "closed-form")]
    mode: String,
    /// Evaluate the energy at every step and enforce the per-step balance
    /// between energy drop and damping dissipation.
    #[arg(long)]
    check_dissipation: bool,
    /// Output directory for this run; its final component names the run.
    /// Defaults to $WAVEDUO_OUT/<derived-name>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PaperArgs {
    /// Root directory receiving one subdirectory per case.
    /// Defaults to $WAVEDUO_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Glob over case names ('*' and '?'), e.g. "b3*" or "*-a2".
    #[arg(long)]
    only: Option<String>,
    /// Worker pool size for running cases in parallel.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Run only the T=500 variants of the catalog.
    #[arg(long)]
    short: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Energy CSV to analyze (the format `run` writes).
    #[arg(long = "in")]
    input: PathBuf,
    /// Fit-window fraction of the final time, overriding the default 0.1.
    #[arg(long)]
    window: Option<f64>,
}

/// Parses `argv` and executes the chosen subcommand, returning the process
/// exit code per the contract in the module docs.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Paper(args) => cmd_paper(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::ListCases => {
            cmd_list_cases();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

/// Maps a harness error onto the exit-code contract.
fn exit_code(err: &HarnessError) -> i32 {
    if err.is_runtime() {
        2
    } else if err.is_io() {
        3
    } else {
        1
    }
}

fn bad(reason: String) -> HarnessError {
    HarnessError::BadSpec(reason)
}

/// `$WAVEDUO_OUT`, when set and valid UTF-8.
fn env_out_root() -> Option<PathBuf> {
    std::env::var(OUT_ENV).ok().map(PathBuf::from)
}

/// A filesystem-safe run name derived from the run parameters, used when
/// `--out` is not given.
fn derived_run_name(args: &RunArgs) -> String {
    let raw = format!("a{}-{}-{}-T{}", args.a, args.b, args.c, args.t_final);
    raw.chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || "-_.".contains(ch) { ch } else { '-' })
        .collect()
}

/// Splits a run's output directory into (root, case name).
fn split_out_dir(out: &Path) -> Result<(PathBuf, String), HarnessError> {
    let name = out
        .file_name()
        .ok_or_else(|| bad(format!("--out '{}' has no final path component", out.display())))?
        .to_string_lossy()
        .into_owned();
    let root = out.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((root, name))
}

fn cmd_run(args: &RunArgs) -> Result<(), HarnessError> {
    let stride: Stride = args.stride.parse().map_err(bad)?;
    let mode: StepMode = args.mode.parse().map_err(bad)?;
    let out = match &args.out {
        Some(dir) => dir.clone(),
        None => env_out_root()
            .ok_or_else(|| {
                bad(format!("no output directory: pass --out or set {OUT_ENV}"))
            })?
            .join(derived_run_name(args)),
    };
    let (root, name) = split_out_dir(&out)?;
    let spec = ExperimentSpec {
        name,
        a: args.a,
        n: args.n,
        t_final: args.t_final,
        cfl_factor: args.cfl_factor,
        b_spec: args.b.clone(),
        c_spec: args.c.clone(),
        initial: Default::default(),
        stride,
        mode,
        check_dissipation: args.check_dissipation,
        comment: None,
    };
    let manifest = run_experiment(&spec, &root)?;
    println!("wrote {}", root.join(&spec.name).display());
    println!("{}", summary_line(&manifest.report));
    Ok(())
}

fn cmd_paper(args: &PaperArgs) -> Result<(), HarnessError> {
    let root = match &args.out {
        Some(dir) => dir.clone(),
        None => env_out_root()
            .ok_or_else(|| bad(format!("no output root: pass --out or set {OUT_ENV}")))?,
    };
    let runs = run_catalog(&root, args.only.as_deref(), args.workers, args.short)?;
    println!(
        "{:<16} {:<12} {:>8} {:>7} {:>11} {:>7}",
        "case", "class", "alpha", "r2", "rate", "secant"
    );
    for run in &runs {
        println!("{}", table_row(run));
    }
    println!("wrote {} case directories under {}", runs.len(), root.display());
    Ok(())
}

fn table_row(run: &CatalogRun) -> String {
    let r = &run.manifest.report;
    let fmt = |v: Option<f64>, prec: usize| match v {
        Some(x) => format!("{x:.prec$}"),
        None => "-".to_string(),
    };
    let rate = match r.exp_rate {
        Some(x) => format!("{x:.4e}"),
        None => "-".to_string(),
    };
    format!(
        "{:<16} {:<12} {:>8} {:>7} {:>11} {:>7}",
        run.spec.name,
        r.classification.to_string(),
        fmt(r.alpha, 3),
        fmt(r.r2, 3),
        rate,
        fmt(r.stats.secant_exponent, 3),
    )
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), HarnessError> {
    let mut thresholds = DecayThresholds::default();
    if let Some(w) = args.window {
        if !w.is_finite() || w <= 0.0 || w >= 1.0 {
            return Err(bad(format!("--window must lie strictly between 0 and 1, got {w}")));
        }
        thresholds.fit_window = w;
    }
    let points = read_energy_csv(&args.input)?;
    let series = crate::analysis::DecaySeries::from_energy(&points)?;
    let report = classify(&series, &thresholds);
    match toml::to_string_pretty(&report) {
        Ok(text) => print!("{text}"),
        Err(err) => return Err(bad(format!("cannot render report: {err}"))),
    }
    println!("{}", summary_line(&report));
    Ok(())
}

/// Support of a catalog profile in the form "[0.1,0.2]+[0.8,0.9]" ("0" when
/// the profile vanishes identically; "@amp" marks non-unit amplitudes).
fn support_text(profile: &CoefficientProfile) -> String {
    if profile.pieces().is_empty() {
        return "0".to_string();
    }
    profile
        .pieces()
        .iter()
        .map(|p| {
            if p.amplitude == 1.0 {
                format!("[{},{}]", p.lo, p.hi)
            } else {
                format!("[{},{}]@{}", p.lo, p.hi, p.amplitude)
            }
        })
        .collect::<Vec<_>>()
        .join("+")
}

/// One `list-cases` line: name, wave speed, horizon, and both supports.
fn catalog_line(spec: &ExperimentSpec) -> String {
    // Catalog entries always carry valid named profiles.
    let b = parse_profile(&spec.b_spec).expect("catalog profile");
    let c = parse_profile(&spec.c_spec).expect("catalog profile");
    format!(
        "{:<16} a={:<4} T={:<7} {} = {}  {} = {}",
        spec.name,
        spec.a,
        spec.t_final,
        spec.b_spec,
        support_text(&b),
        spec.c_spec,
        support_text(&c),
    )
}

fn cmd_list_cases() {
    for spec in reference_catalog() {
        println!("{}", catalog_line(&spec));
    }
}

/// Machine-greppable one-line report summary, e.g.
/// "CLASS=Polynomial ALPHA=1.40 R2=0.998" or "CLASS=Exponential RATE=4.1e-2".
pub fn summary_line(report: &DecayReport) -> String {
    let mut line = format!("CLASS={}", report.classification);
    if let Some(rate) = report.exp_rate {
        line.push_str(&format!(" RATE={rate:.4e}"));
    }
    if matches!(
        report.classification,
        Classification::Polynomial | Classification::Undetermined
    ) {
        if let Some(alpha) = report.alpha {
            line.push_str(&format!(" ALPHA={alpha:.2}"));
        }
        if let Some(r2) = report.r2 {
            line.push_str(&format!(" R2={r2:.3}"));
        }
    }
    line
}

/// `--only` filters with the same matcher the catalog runner uses; exposed
/// for callers that want to pre-check a pattern.
pub fn pattern_selects_any(pattern: &str) -> bool {
    reference_catalog().iter().any(|s| glob_match(pattern, &s.name))
}
