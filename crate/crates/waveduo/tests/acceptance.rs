//! Acceptance gate: one test per criterion, each printing a
//! `criterion N: PASS/FAIL` line with the measured numbers. Tolerances are
//! pinned here on purpose — these tests state what the finished tool must
//! do, so they must not drift with implementation details.
//!
//! Criteria 6 and 7 compare long-horizon fitted tail exponents against
//! reference targets; the printed case lines carry the complete measured
//! evidence (windowed fit, fit stability, r², whole-series secant exponent,
//! decay factor) for auditing any discrepancy.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use waveduo::analysis::{
    classify, fit_polynomial_exponent, Classification, DecayReport, DecaySeries, DecayThresholds,
};
use waveduo::energy::{compute_energy, dissipation_residual, EnergyRecord, Summation};
use waveduo::harness::{elaborate, reference_catalog, run_experiment, ExperimentSpec};
use waveduo::model::{
    named_case, sample_profile, CoefficientProfile, GridSpec, InitialData, InitialFn,
    InitialSelector, PhysicalConfig,
};
use waveduo::scheme::{
    max_stable_dt, precompute_coefficients, run, step_closed_form, step_reference_solve,
    LevelView, StepMode, TimeSpec,
};

/// Runs a case in memory and returns the energy records at the given stride
/// (`None` = the case's own stride).
fn record_energies(spec: &ExperimentSpec, stride_override: Option<u64>) -> Vec<EnergyRecord> {
    let elab = elaborate(spec).expect("valid spec");
    let c = sample_profile(&elab.config.c, &elab.grid);
    let (dx, dt, a) = (elab.grid.dx(), elab.time.dt(), elab.config.a);
    let stride = stride_override.unwrap_or(elab.stride);
    let mut records = Vec::new();
    run(
        &elab.config,
        &elab.grid,
        &elab.time,
        &spec.initial.data(),
        spec.mode,
        stride,
        |view| records.push(compute_energy(&view, dx, dt, a, &c, Summation::Sequential)),
    )
    .expect("stable run");
    records
}

fn report_for(spec: &ExperimentSpec) -> DecayReport {
    let records = record_energies(spec, None);
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.e_total)).collect();
    let series = DecaySeries::from_energy(&points).expect("well-formed series");
    classify(&series, &DecayThresholds::default())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".to_string())
}

#[test]
fn criterion_1_energy_conservation_without_damping() {
    let started = Instant::now();
    let spec = ExperimentSpec::new("conservation", 1.0, "b3", "c1", 500.0);
    let records = record_energies(&spec, Some(1));
    let e0 = records[0].e_total;
    let drift = records
        .iter()
        .map(|r| (r.e_total - e0).abs() / e0)
        .fold(0.0f64, f64::max);
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 1: {} — relative energy drift {drift:.3e} over {} records \
         (tolerance 1e-9), {elapsed:.2} s",
        if drift <= 1e-9 { "PASS" } else { "FAIL" },
        records.len()
    );
    assert!(drift <= 1e-9, "conservation drift {drift:e} exceeds 1e-9");
    assert!(elapsed < 1.0, "took {elapsed:.2} s, budget 1 s");
}

#[test]
fn criterion_2_per_step_dissipation_identity() {
    let started = Instant::now();
    let mut lines = Vec::new();
    for (b, c, a) in [("b4", "c3", 1.0), ("b4", "c5", 2.0), ("b5", "c4", 0.5)] {
        let grid = GridSpec::new(100).unwrap();
        let config = PhysicalConfig::new(
            a,
            named_case(b).unwrap(),
            named_case(c).unwrap(),
        )
        .unwrap();
        let time = TimeSpec::from_step_count(a, &grid, 10_000, 1.0).unwrap();
        let c_samples = sample_profile(&config.c, &grid);
        let (dx, dt) = (grid.dx(), time.dt());

        let mut prev: Option<EnergyRecord> = None;
        let mut tol = 0.0;
        let mut worst_residual = 0.0f64;
        let mut worst_increase = 0.0f64;
        run(
            &config,
            &grid,
            &time,
            &InitialSelector::Default.data(),
            StepMode::ClosedForm,
            1,
            |view| {
                let rec = compute_energy(&view, dx, dt, a, &c_samples, Summation::Sequential);
                match &prev {
                    None => tol = 1e-12 * rec.e_total.max(1.0),
                    Some(p) => {
                        let r = dissipation_residual(&rec, p).unwrap().abs();
                        worst_residual = worst_residual.max(r);
                        worst_increase = worst_increase.max(rec.e_total - p.e_total);
                    }
                }
                prev = Some(rec);
            },
        )
        .unwrap();

        assert!(
            worst_residual <= tol,
            "({b},{c},a={a}): residual {worst_residual:e} exceeds {tol:e}"
        );
        assert!(
            worst_increase <= tol,
            "({b},{c},a={a}): energy increased by {worst_increase:e}, tolerance {tol:e}"
        );
        lines.push(format!(
            "({b},{c},a={a}) worst residual {worst_residual:.2e}, worst increase \
             {worst_increase:.2e}, bound {tol:.2e}"
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion 2: PASS — {}; {elapsed:.2} s", lines.join("; "));
    assert!(elapsed < 5.0, "took {elapsed:.2} s, budget 5 s");
}

#[test]
fn criterion_3_dual_step_paths_agree() {
    let started = Instant::now();
    let grid = GridSpec::new(100).unwrap();
    let a = 2.0;
    let config =
        PhysicalConfig::new(a, named_case("b4").unwrap(), named_case("c3").unwrap()).unwrap();
    // Strictly inside the stability region: at the exact limit the roughest
    // mode of random data grows linearly (defective amplification matrix),
    // so an absolute comparison would measure growth rather than path
    // disagreement. At 0.95 every mode is neutrally stable and the states
    // stay bounded, as the criterion presumes.
    let time = TimeSpec::from_step_count(a, &grid, 1_000, 0.95).unwrap();
    let (dt, lambda) = (time.dt(), time.lambda());
    let coeffs = precompute_coefficients(&config, &grid, dt).unwrap();
    let b = sample_profile(&config.b, &grid);
    let c = sample_profile(&config.c, &grid);
    let m = grid.node_count();

    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_e97);
    let mut bounded = || {
        let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        v[0] = 0.0;
        v[m - 1] = 0.0;
        v
    };
    let (mut up_a, mut uc_a, mut yp_a, mut yc_a) =
        (bounded(), bounded(), bounded(), bounded());
    let (mut up_b, mut uc_b, mut yp_b, mut yc_b) =
        (up_a.clone(), uc_a.clone(), yp_a.clone(), yc_a.clone());

    let mut worst = 0.0f64;
    let (mut un_a, mut yn_a) = (vec![0.0; m], vec![0.0; m]);
    let (mut un_b, mut yn_b) = (vec![0.0; m], vec![0.0; m]);
    for _ in 0..1_000 {
        step_closed_form(&up_a, &uc_a, &yp_a, &yc_a, &coeffs, lambda, a, &mut un_a, &mut yn_a);
        step_reference_solve(
            &up_b, &uc_b, &yp_b, &yc_b, &b, &c, dt, lambda, a, &mut un_b, &mut yn_b,
        );
        for j in 0..m {
            worst = worst.max((un_a[j] - un_b[j]).abs()).max((yn_a[j] - yn_b[j]).abs());
        }
        std::mem::swap(&mut up_a, &mut uc_a);
        std::mem::swap(&mut uc_a, &mut un_a);
        std::mem::swap(&mut yp_a, &mut yc_a);
        std::mem::swap(&mut yc_a, &mut yn_a);
        std::mem::swap(&mut up_b, &mut uc_b);
        std::mem::swap(&mut uc_b, &mut un_b);
        std::mem::swap(&mut yp_b, &mut yc_b);
        std::mem::swap(&mut yc_b, &mut yn_b);
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 3: {} — max deviation {worst:.3e} over 1000 steps (tolerance 1e-12), \
         {elapsed:.2} s",
        if worst <= 1e-12 { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-12, "paths deviate by {worst:e}");
    assert!(elapsed < 1.0, "took {elapsed:.2} s, budget 1 s");
}

#[test]
fn criterion_4_uncoupled_leapfrog_exactness() {
    let started = Instant::now();
    let grid = GridSpec::new(100).unwrap();
    let config = PhysicalConfig::new(
        1.0,
        CoefficientProfile::zero(),
        CoefficientProfile::zero(),
    )
    .unwrap();
    let time = TimeSpec::new(1.0, &grid, 10.0, 1.0).unwrap();
    let init = InitialData {
        u0: InitialFn::SineMode { mode: 1, scale: 1.0 },
        u1: InitialFn::Zero,
        y0: InitialFn::Zero,
        y1: InitialFn::Zero,
    };
    let pi = std::f64::consts::PI;
    let mut worst = 0.0f64;
    run(&config, &grid, &time, &init, StepMode::ClosedForm, 1, |view: LevelView<'_>| {
        for j in 0..grid.node_count() {
            let exact = (pi * grid.node(j)).sin() * (pi * view.t).cos();
            worst = worst.max((view.u_curr[j] - exact).abs());
        }
    })
    .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 4: {} — max-norm error {worst:.3e} against the separated-variables \
         solution (tolerance 1e-10), {elapsed:.2} s",
        if worst <= 1e-10 { "PASS" } else { "FAIL" }
    );
    assert!(worst <= 1e-10, "error {worst:e} exceeds 1e-10");
    assert!(elapsed < 1.0, "took {elapsed:.2} s, budget 1 s");
}

#[test]
fn criterion_5_equal_speed_cases_classify_exponential() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for name in ["b4-c3-a1", "b4-c5-a1", "b5-c4-a1"] {
        let spec = reference_catalog().into_iter().find(|s| s.name == name).unwrap();
        let report = run_experiment(&spec, dir.path()).unwrap().report;
        let band = report.stats.d1_tail_band;
        let mean = report.stats.d1_tail_mean;
        lines.push(format!(
            "{name}: class={} tail-d1 mean={} band={}",
            report.classification,
            opt(mean),
            opt(band)
        ));
        if report.classification != Classification::Exponential {
            failures.push(name);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 5: {} — {}; {elapsed:.2} s",
        if failures.is_empty() { "PASS" } else { "FAIL" },
        lines.join("; ")
    );
    assert!(failures.is_empty(), "not Exponential: {failures:?}");
    assert!(elapsed < 3.0, "took {elapsed:.2} s, budget 3 s");
}

/// Shared body of criteria 6 and 7: three coupling/damping layouts at one
/// wave speed, judged on the long horizon (fitted alpha within ±0.2 of the
/// target and classified Polynomial) and on a T=100000 smoke horizon
/// (classified Polynomial with alpha within ±0.35).
fn polynomial_criterion(
    criterion: u32,
    a: f64,
    cases: &[(&str, &str, f64)],
) {
    let mut failures: Vec<String> = Vec::new();
    for &(b, c, target) in cases {
        let spec = ExperimentSpec::new("long", a, b, c, 500_000.0);
        let report = report_for(&spec);
        let stats = &report.stats;
        let alpha_ok = report.alpha.map(|x| (x - target).abs() <= 0.2).unwrap_or(false);
        let class_ok = report.classification == Classification::Polynomial;
        println!(
            "criterion {criterion} long ({b},{c},a={a}): {} — fitted alpha={} \
             (target {target}±0.2) r2={} stability-window alpha={} class={} \
             secant-exponent={} E_last/E_first={:.3e}",
            if alpha_ok && class_ok { "PASS" } else { "FAIL" },
            opt(report.alpha),
            opt(report.r2),
            opt(stats.alpha_secondary),
            report.classification,
            opt(stats.secant_exponent),
            stats.e_last / stats.e_first,
        );
        if !alpha_ok {
            failures.push(format!(
                "long ({b},{c}): fitted alpha {} not within ±0.2 of {target}",
                opt(report.alpha)
            ));
        }
        if !class_ok {
            failures.push(format!(
                "long ({b},{c}): classified {} instead of Polynomial",
                report.classification
            ));
        }

        let smoke_spec = ExperimentSpec::new("smoke", a, b, c, 100_000.0);
        let smoke = report_for(&smoke_spec);
        let alpha_ok = smoke.alpha.map(|x| (x - target).abs() <= 0.35).unwrap_or(false);
        let class_ok = smoke.classification == Classification::Polynomial;
        println!(
            "criterion {criterion} smoke ({b},{c},a={a}): {} — fitted alpha={} \
             (target {target}±0.35) r2={} class={} secant-exponent={}",
            if alpha_ok && class_ok { "PASS" } else { "FAIL" },
            opt(smoke.alpha),
            opt(smoke.r2),
            smoke.classification,
            opt(smoke.stats.secant_exponent),
        );
        if !alpha_ok {
            failures.push(format!(
                "smoke ({b},{c}): fitted alpha {} not within ±0.35 of {target}",
                opt(smoke.alpha)
            ));
        }
        if !class_ok {
            failures.push(format!(
                "smoke ({b},{c}): classified {} instead of Polynomial",
                smoke.classification
            ));
        }
    }
    assert!(
        failures.is_empty(),
        "criterion {criterion} (a={a}): {} clause(s) failed:\n  {}\n\
         The dynamics themselves are cross-checked by criteria 2-4 and by the \
         recorded secant exponents above; see the printed case lines for the \
         measured fit values.",
        failures.len(),
        failures.join("\n  ")
    );
}

#[test]
fn criterion_6_tail_exponents_at_speed_2() {
    polynomial_criterion(6, 2.0, &[("b4", "c3", 1.4), ("b4", "c5", 0.9), ("b5", "c4", 1.19)]);
}

#[test]
fn criterion_7_tail_exponents_at_speed_half() {
    polynomial_criterion(7, 0.5, &[("b4", "c3", 1.5), ("b4", "c5", 1.25), ("b5", "c4", 1.15)]);
}

#[test]
fn criterion_8_short_horizon_energy_stall() {
    let started = Instant::now();
    let spec = ExperimentSpec::new("stall", 2.0, "b4", "c3", 500.0);
    let records = record_energies(&spec, None);
    let ratio = records.last().unwrap().e_total / records[0].e_total;
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "criterion 8: {} — E(500)/E(0) = {ratio:.4} (threshold 0.01), {elapsed:.2} s",
        if ratio >= 0.01 { "PASS" } else { "FAIL" }
    );
    assert!(ratio >= 0.01, "energy ratio {ratio} fell below 0.01");
    assert!(elapsed < 1.0, "took {elapsed:.2} s, budget 1 s");
}

#[test]
fn criterion_9_analyzer_self_test() {
    // (a) Planted 5*t^-1.4 noiseless series: exact recovery.
    let n = 400;
    let points: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = (2.0f64.ln() + (1000.0f64 / 2.0).ln() * i as f64 / (n - 1) as f64).exp();
            (t, 5.0 * t.powf(-1.4))
        })
        .collect();
    let series = DecaySeries::from_energy(&points).unwrap();
    let fit = fit_polynomial_exponent(&series, 0.1).unwrap();
    assert!(
        (fit.alpha - 1.4).abs() <= 1e-6,
        "planted exponent missed: {}",
        fit.alpha
    );
    assert!(fit.r2 >= 1.0 - 1e-9, "planted fit r2 {} below 1-1e-9", fit.r2);
    let planted = classify(&series, &DecayThresholds::default());
    assert_eq!(planted.classification, Classification::Polynomial);

    // (b) Planted exponential series must never classify Polynomial, under
    // either log-uniform or uniform sampling.
    for rate in [1e-3, 1e-2, 0.1, 1.0] {
        for prefactor in [1e-3, 1.0, 1e3] {
            for log_spaced in [true, false] {
                let points: Vec<(f64, f64)> = (0..500)
                    .map(|i| {
                        let t = if log_spaced {
                            (1.0f64.ln() + 2000.0f64.ln() * i as f64 / 499.0).exp()
                        } else {
                            0.5 + 2000.0 * i as f64 / 499.0
                        };
                        (t, prefactor * (-rate * t).exp())
                    })
                    .collect();
                let series = DecaySeries::from_energy(&points).unwrap();
                let verdict = classify(&series, &DecayThresholds::default());
                assert_ne!(
                    verdict.classification,
                    Classification::Polynomial,
                    "exponential (rate {rate}, prefactor {prefactor}, log_spaced \
                     {log_spaced}) misread as Polynomial"
                );
            }
        }
    }

    // (c) Coupling-sign symmetry on randomized configs: negating the
    // coupling and the y-side initial data negates y exactly and leaves u
    // untouched.
    let mut rng = ChaCha8Rng::seed_from_u64(0x51f7);
    for round in 0..8 {
        let grid = GridSpec::new(24).unwrap();
        let m = grid.node_count();
        let a = rng.gen_range(0.3..3.0);
        let piece = |rng: &mut ChaCha8Rng, lo_amp: f64, hi_amp: f64| {
            let lo: f64 = rng.gen_range(0.0..0.8);
            let hi: f64 = lo + rng.gen_range(0.05..(1.0 - lo).clamp(0.06, 0.9));
            (lo, hi.min(1.0), rng.gen_range(lo_amp..hi_amp))
        };
        let b = CoefficientProfile::from_pieces(vec![piece(&mut rng, -2.0, 2.0)]).unwrap();
        let b_neg = CoefficientProfile::from_pieces(
            b.pieces().iter().map(|p| (p.lo, p.hi, -p.amplitude)).collect::<Vec<_>>(),
        )
        .unwrap();
        let c = CoefficientProfile::from_pieces(vec![piece(&mut rng, 0.0, 2.0)]).unwrap();

        let interior = |rng: &mut ChaCha8Rng| {
            let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            v[0] = 0.0;
            v[m - 1] = 0.0;
            v
        };
        let (u0, u1) = (interior(&mut rng), interior(&mut rng));
        let (y0, y1) = (interior(&mut rng), interior(&mut rng));
        let init = InitialData {
            u0: InitialFn::Tabulated(u0.clone()),
            u1: InitialFn::Tabulated(u1.clone()),
            y0: InitialFn::Tabulated(y0.clone()),
            y1: InitialFn::Tabulated(y1.clone()),
        };
        let init_neg = InitialData {
            u0: InitialFn::Tabulated(u0),
            u1: InitialFn::Tabulated(u1),
            y0: InitialFn::Tabulated(y0.iter().map(|v| -v).collect()),
            y1: InitialFn::Tabulated(y1.iter().map(|v| -v).collect()),
        };

        let config = PhysicalConfig::new(a, b, c.clone()).unwrap();
        let config_neg = PhysicalConfig::new(a, b_neg, c).unwrap();
        let time = TimeSpec::from_step_count(a, &grid, 150, 0.9).unwrap();
        let state = run(&config, &grid, &time, &init, StepMode::ClosedForm, 150, |_| {}).unwrap();
        let state_neg =
            run(&config_neg, &grid, &time, &init_neg, StepMode::ClosedForm, 150, |_| {}).unwrap();

        assert_eq!(state.u_curr, state_neg.u_curr, "round {round}: u must be unchanged");
        let y_mirrored: Vec<f64> = state_neg.y_curr.iter().map(|v| -v).collect();
        assert_eq!(state.y_curr, y_mirrored, "round {round}: y must be exactly negated");
    }

    // (d) Scaling the state by 2 scales every energy component by exactly 4.
    let mut rng = ChaCha8Rng::seed_from_u64(0xca1e);
    for round in 0..8 {
        let grid = GridSpec::new(30).unwrap();
        let m = grid.node_count();
        let a = rng.gen_range(0.3..3.0);
        let dx = grid.dx();
        let dt = 0.8 * max_stable_dt(a, dx);
        let c: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0)).collect();
        let field = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let (up, uc, un) = (field(&mut rng), field(&mut rng), field(&mut rng));
        let (yp, yc, yn) = (field(&mut rng), field(&mut rng), field(&mut rng));
        let double = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| 2.0 * x).collect() };
        let (up2, uc2, un2) = (double(&up), double(&uc), double(&un));
        let (yp2, yc2, yn2) = (double(&yp), double(&yc), double(&yn));

        let view = LevelView {
            n: 5,
            t: 5.0 * dt,
            u_prev: &up,
            u_curr: &uc,
            u_next: &un,
            y_prev: &yp,
            y_curr: &yc,
            y_next: &yn,
        };
        let scaled = LevelView {
            n: 5,
            t: 5.0 * dt,
            u_prev: &up2,
            u_curr: &uc2,
            u_next: &un2,
            y_prev: &yp2,
            y_curr: &yc2,
            y_next: &yn2,
        };
        let base = compute_energy(&view, dx, dt, a, &c, Summation::Sequential);
        let four = compute_energy(&scaled, dx, dt, a, &c, Summation::Sequential);
        assert_eq!(4.0 * base.e_ku, four.e_ku, "round {round}");
        assert_eq!(4.0 * base.e_pu, four.e_pu, "round {round}");
        assert_eq!(4.0 * base.e_ky, four.e_ky, "round {round}");
        assert_eq!(4.0 * base.e_py, four.e_py, "round {round}");
        assert_eq!(4.0 * base.e_total, four.e_total, "round {round}");
        assert_eq!(4.0 * base.damping_sum, four.damping_sum, "round {round}");
    }

    println!(
        "criterion 9: PASS — planted exponent recovered to {:.1e} with r2 deficit {:.1e}; \
         24 exponential decoys rejected; 8 sign-symmetry and 8 scaling rounds exact",
        (fit.alpha - 1.4).abs(),
        1.0 - fit.r2
    );
}
