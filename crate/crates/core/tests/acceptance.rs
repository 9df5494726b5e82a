//! End-to-end acceptance criteria. Each test prints one
//! `criterion N: PASS|FAIL` line before asserting; the line goes straight to
//! stdout so it shows up without `--nocapture`.
//!
//! Criteria 6–8 are long sweeps and are ignored by default; run them with
//! `cargo test --release -p nematic-core --test acceptance -- --ignored --nocapture`.

use std::io::Write;
use std::time::Instant;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;

use nematic_core::algebra::{
    bright_dark_form, exchange_form, frobenius, hamiltonian_form_residual, manifold_triple, one_body_part, twisting_form,
    ManifoldLabel, OperatorMatrix, TwistingReading, TOL,
};
use nematic_core::dtwa::run_ensemble;
use nematic_core::exact::{evolve, ExactBasis, KrylovConfig, SparseOperator};
use nematic_core::experiments::io::write_records;
use nematic_core::experiments::{
    benchmark_compare, run_scaling, run_single, simulate_trace, Method, OmegaScan, RunConfig, ScalingOutput, SweepSpec,
};
use nematic_core::lattice::{
    coupling_matrix, initial_state, site_state, CouplingMatrices, CouplingSpec, GeometrySpec, HamiltonianSpec,
    InitialStateKind,
};

fn report(criterion: u32, pass: bool, detail: &str) {
    // bypasses libtest's capture of `println!`
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
}

fn within(x: f64, center: f64, half_width: f64) -> bool {
    (x - center).abs() <= half_width
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_1_algebra_identities() {
    let start = Instant::now();
    let symmetric = hamiltonian_form_residual(&exchange_form(1.0, 1.0), &bright_dark_form(1.0).unwrap(), false);
    let target = exchange_form(1.0, -1.0);
    let resolved_form = twisting_form(1.0, TwistingReading::PairwiseResolved);
    let resolved = hamiltonian_form_residual(&target, &resolved_form, false);
    let one_body = frobenius(&one_body_part(&(&target - &resolved_form)));
    let printed = hamiltonian_form_residual(&target, &twisting_form(1.0, TwistingReading::PairwisePrinted), true);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = symmetric < TOL && resolved < TOL && one_body < TOL && elapsed < 1.0;
    report(
        1,
        pass,
        &format!(
            "symmetric-form residual {symmetric:.1e}, antisymmetric-form residual {resolved:.1e} \
             (one-body part {one_body:.1e}; printed-sign reading {printed:.3}), {elapsed:.3} s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_2_symmetric_sector_matches_full_space() {
    // One physical window for every case: long enough to pass the squeezing
    // minimum for N ≤ 6, short of t = π/2 where the one-axis-twisting mean
    // spin vanishes and ξ² (~1e19 there) is no longer well conditioned.
    let relative = |x: f64, y: f64| {
        if x == y {
            0.0
        } else {
            let d = (x - y).abs() / y.abs().max(1.0);
            if d.is_nan() { f64::INFINITY } else { d }
        }
    };
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 2..=6 {
        for (jr, omega) in [(1.0, 0.0), (-1.0, 0.0), (-1.0, 1.3), (0.5, 0.0)] {
            let mut sym = RunConfig::all_to_all(Method::ExactSymmetric, n, jr);
            sym.time_grid.points = 50;
            sym.time_grid.t_max = Some(1.0);
            sym.drive.omega = omega;
            let mut full = sym.clone();
            full.method = Method::ExactFull;
            let a = simulate_trace(&sym, omega).unwrap();
            let b = simulate_trace(&full, omega).unwrap();
            assert_eq!(a.times.len(), 50);
            for (x, y) in a.results.iter().zip(&b.results) {
                worst = worst.max(relative(x.xi2, y.xi2)).max(relative(x.fq, y.fq));
            }
            cases += 1;
        }
    }
    let pass = worst < 1e-8;
    report(2, pass, &format!("{cases} cases, N = 2..6, 50 times in [0, 1/J̄] each: largest relative difference {worst:.1e}"));
    assert!(pass);
}

// ---------------------------------------------------------------- 3

fn population(basis: &ExactBasis, v: Vector3<C64>) -> SparseOperator {
    basis.collective_operator(&OperatorMatrix::outer(&v, &v))
}

#[test]
fn criterion_3_conservation_laws() {
    // bright and dark excitation numbers at Jr = 1
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bright = Vector3::new(C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0));
    let dark = Vector3::new(C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(-h, 0.0));
    let generic = InitialStateKind::Custom([[0.5, 0.1], [0.3, -0.6], [-0.2, 0.45]]);
    let square = coupling_matrix(&GeometrySpec::square(3, 3).build().unwrap(), &CouplingSpec::dipolar(1.0)).unwrap();
    let mut number_drift: f64 = 0.0;
    for couplings in [CouplingMatrices::uniform(6, 1.0, 1.0), square] {
        let n = couplings.n_sites();
        let basis = ExactBasis::full(n, 12).unwrap();
        let ham = basis.hamiltonian(&HamiltonianSpec::new(couplings, 0.0)).unwrap();
        let psi0 = basis.product_state(&initial_state(&generic, n).unwrap()).unwrap();
        let times: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
        let states = evolve(&ham, &psi0, &times, &KrylovConfig::default()).unwrap();
        for op in [population(&basis, bright), population(&basis, dark)] {
            let v0 = op.expectation(&psi0.amps).re;
            for psi in &states {
                number_drift = number_drift.max((op.expectation(&psi.amps).re - v0).abs());
            }
        }
    }

    // the D_xy-aligned state is inert at Jr = -1 without drive
    let mut inert = RunConfig::all_to_all(Method::ExactSymmetric, 50, -1.0);
    inert.initial_state = Some(InitialStateKind::DxyAligned);
    let trace = simulate_trace(&inert, 0.0).unwrap();
    let first = &trace.results[0];
    let inert_drift = trace
        .results
        .iter()
        .map(|r| {
            let xi = if r.xi2 == first.xi2 { 0.0 } else { (r.xi2 - first.xi2).abs() };
            xi.max((r.fq - first.fq).abs()).max((r.spin_length - first.spin_length).abs())
        })
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });

    // dTWA invariants along every trajectory
    let mut casimir: f64 = 0.0;
    let mut energy: f64 = 0.0;
    let cases = [
        (CouplingMatrices::uniform(49, 1.0, 0.5), 0.0, InitialStateKind::Bx, ManifoldLabel::Bright, 1.0),
        (
            CouplingMatrices::uniform(100, 1.0, -1.0),
            28.0,
            InitialStateKind::Sax,
            ManifoldLabel::A,
            0.12,
        ),
        (
            coupling_matrix(&GeometrySpec::square(5, 5).build().unwrap(), &CouplingSpec::dipolar(1.0)).unwrap(),
            0.0,
            InitialStateKind::Bx,
            ManifoldLabel::Bright,
            2.0,
        ),
    ];
    for (couplings, omega, state, label, t_max) in cases {
        let spec = HamiltonianSpec::new(couplings, omega);
        let times: Vec<f64> = (0..60).map(|k| t_max * k as f64 / 59.0).collect();
        let config = nematic_core::dtwa::DtwaConfig {
            trajectories: 500,
            seed: 3,
            ..Default::default()
        };
        let e = run_ensemble(&spec, &site_state(&state).unwrap(), &manifold_triple(label).unwrap(), &times, &config)
            .unwrap();
        casimir = casimir.max(e.diagnostics.max_casimir_drift);
        energy = energy.max(e.diagnostics.max_energy_drift);
    }

    let pass = number_drift < 1e-8 && inert_drift < 1e-8 && casimir < 1e-6 && energy < 1e-6;
    report(
        3,
        pass,
        &format!(
            "N_B/N_D drift {number_drift:.1e}; inert state ξ² = {:.6} with drift {inert_drift:.1e}; \
             dTWA Casimir drift {casimir:.1e}, energy drift {energy:.1e}",
            first.xi2
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 4

/// `F_Q` of a coherent state: `2·S·N` with `S` the manifold spin (½ for
/// bright/dark, 1 for the A/B triples).
fn coherent_fisher(n: usize, state: &InitialStateKind) -> f64 {
    let spin = match state {
        InitialStateKind::Sax | InitialStateKind::Sbx => 1.0,
        _ => 0.5,
    };
    2.0 * spin * n as f64
}

#[test]
fn criterion_4_coherent_state_normalization() {
    let states = [
        (InitialStateKind::Bx, 1.0),
        (InitialStateKind::Dx, 1.0),
        (InitialStateKind::Sax, -1.0),
        (InitialStateKind::Sbx, -1.0),
    ];
    let mut exact_worst: f64 = 0.0;
    for (state, jr) in &states {
        for (method, n) in [
            (Method::ExactFull, 1),
            (Method::ExactFull, 5),
            (Method::ExactSymmetric, 7),
            (Method::ExactSymmetric, 300),
        ] {
            let mut c = RunConfig::all_to_all(method, n, *jr);
            c.initial_state = Some(state.clone());
            c.time_grid.points = 1;
            let r = &simulate_trace(&c, 0.0).unwrap().results[0];
            exact_worst = exact_worst.max((r.reported_xi2() - 1.0).abs());
            exact_worst = exact_worst.max((r.fq - coherent_fisher(n, state)).abs() / n as f64);
        }
    }

    let mut dtwa_ok = true;
    let mut dtwa_worst: f64 = 0.0;
    for (state, jr) in &states {
        for geometry in [GeometrySpec::chain(49), GeometrySpec::square(4, 4)] {
            let mut c = RunConfig::all_to_all(Method::Dtwa, 1, *jr);
            c.geometry = geometry;
            if c.geometry.dimension == 2 {
                c.coupling = CouplingSpec::dipolar(*jr);
            }
            c.initial_state = Some(state.clone());
            c.time_grid.points = 1;
            c.dtwa.trajectories = 5000;
            c.dtwa.seed = 17;
            let n = c.n_sites();
            let trace = simulate_trace(&c, 0.0).unwrap();
            let r = &trace.results[0];
            let se = trace.stderr.as_ref().unwrap()[0];
            let factor = if c.antisymmetric() { 2.0 } else { 1.0 };
            let z_xi = (r.reported_xi2() - 1.0).abs() / (factor * se[0]);
            let z_fq = (r.fq - coherent_fisher(n, state)).abs() / se[1];
            dtwa_worst = dtwa_worst.max(z_xi).max(z_fq);
            dtwa_ok &= z_xi <= 3.0 && z_fq <= 3.0;
        }
    }
    let pass = exact_worst < 1e-10 && dtwa_ok;
    report(
        4,
        pass,
        &format!(
            "exact engines: largest deviation {exact_worst:.1e}; dTWA (5000 trajectories): \
             largest deviation {dtwa_worst:.2} bootstrap standard errors"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 5

fn scaling_line(out: &ScalingOutput) -> String {
    let rows: Vec<String> = out
        .records
        .iter()
        .map(|r| format!("N={} ξ²={:.4} F_Q={:.1}", r.n, r.reported_xi2(), r.fq_max))
        .collect();
    format!(
        "ξ² exponent {:.3} ± {:.3}, F_Q exponent {:.3} ± {:.3} [{}]",
        out.xi2_fit.exponent,
        out.xi2_fit.exponent_stderr,
        out.fq_fit.exponent,
        out.fq_fit.exponent_stderr,
        rows.join(", ")
    )
}

#[test]
fn criterion_5_symmetric_all_to_all_scaling() {
    let start = Instant::now();
    let mut c = RunConfig::all_to_all(Method::ExactSymmetric, 16, 1.0);
    c.sweep = Some(SweepSpec {
        sizes: vec![16, 25, 36, 49, 100, 196],
        fit_window: None,
    });
    let out = run_scaling(&c).unwrap();
    let pass = within(out.xi2_fit.exponent, -0.6, 0.1) && within(out.fq_fit.exponent, 2.0, 0.15);
    report(
        5,
        pass,
        &format!(
            "{} (targets −0.6 ± 0.1, 2.0 ± 0.15), {:.1} s",
            scaling_line(&out),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6

#[test]
#[ignore = "long dTWA sweep; run with --ignored"]
fn criterion_6_dipolar_symmetric_scaling() {
    let start = Instant::now();
    let mut c = RunConfig::all_to_all(Method::Dtwa, 4, 1.0);
    c.geometry = GeometrySpec::square(4, 4);
    c.coupling = CouplingSpec::dipolar(1.0);
    c.dtwa.trajectories = 2000;
    c.dtwa.seed = 1;
    c.sweep = Some(SweepSpec {
        sizes: (4..=14).collect(),
        fit_window: None,
    });
    let out = run_scaling(&c).unwrap();
    let pass = within(out.xi2_fit.exponent, -0.5, 0.1) && within(out.fq_fit.exponent, 2.0, 0.25);
    report(
        6,
        pass,
        &format!(
            "{} (targets −0.5 ± 0.1, 2.0 ± 0.25), {:.0} s",
            scaling_line(&out),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 7

/// 16 log-spaced drives in `[1, 20]·J̄√N`, then three rounds of four points
/// between the neighbours of the current best.
fn criterion_7_scan() -> OmegaScan {
    OmegaScan {
        values: None,
        count: 16,
        lo: 1.0,
        hi: 20.0,
        refine_rounds: 3,
        refine_points: 4,
    }
}

#[test]
#[ignore = "long Krylov sweep with drive optimization; run with --ignored"]
fn criterion_7_antisymmetric_all_to_all_scaling() {
    let start = Instant::now();
    let mut c = RunConfig::all_to_all(Method::ExactSymmetric, 200, -1.0);
    c.drive.scan = Some(criterion_7_scan());
    c.sweep = Some(SweepSpec {
        sizes: vec![200, 300, 450, 700, 1000],
        fit_window: None,
    });
    let out = run_scaling(&c).unwrap();
    let pass = within(out.xi2_fit.exponent, -0.7, 0.15) && within(out.fq_fit.exponent, 1.6, 0.2);
    report(
        7,
        pass,
        &format!(
            "{} (targets −0.7 ± 0.15, 1.6 ± 0.2), {:.0} s",
            scaling_line(&out),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 8

#[test]
#[ignore = "long dTWA sweep with drive optimization; run with --ignored"]
fn criterion_8_dipolar_antisymmetric_scaling() {
    let start = Instant::now();
    let mut c = RunConfig::all_to_all(Method::Dtwa, 4, -1.0);
    c.geometry = GeometrySpec::square(4, 4);
    c.coupling = CouplingSpec::dipolar(-1.0);
    c.dtwa.trajectories = 2000;
    c.dtwa.seed = 1;
    c.drive.scan = Some(OmegaScan {
        values: None,
        count: 8,
        lo: 0.1,
        hi: 10.0,
        refine_rounds: 1,
        refine_points: 4,
    });
    c.sweep = Some(SweepSpec {
        sizes: (4..=14).collect(),
        fit_window: Some([0.0, 150.0]),
    });
    let out = run_scaling(&c).unwrap();
    // local exponent beyond the window, for the saturation statement
    let tail: Vec<(f64, f64)> = out
        .records
        .iter()
        .filter(|r| r.n >= 100)
        .map(|r| (r.n as f64, r.reported_xi2()))
        .collect();
    let tail_exponent = nematic_core::experiments::power_law_fit(&tail, [0.0, f64::INFINITY])
        .map(|f| f.exponent)
        .unwrap_or(f64::NAN);
    let pass = within(out.xi2_fit.exponent, -0.5, 0.15) && within(out.fq_fit.exponent, 1.0, 0.25);
    report(
        8,
        pass,
        &format!(
            "N ≤ 150: {} (targets −0.5 ± 0.15, 1.0 ± 0.25); ξ² exponent over N ≥ 100: {tail_exponent:.3}, {:.0} s",
            scaling_line(&out),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_9_dtwa_benchmarks() {
    let mut lines = Vec::new();
    let mut pass = true;
    let pair = |mut dtwa: RunConfig, trajectories: usize| {
        dtwa.dtwa.trajectories = trajectories;
        dtwa.dtwa.seed = 2024;
        let mut exact = dtwa.clone();
        exact.method = if dtwa.coupling.is_all_to_all() {
            Method::ExactSymmetric
        } else {
            Method::ExactFull
        };
        benchmark_compare(&dtwa, &exact).unwrap()
    };
    for jr in [0.5, 1.0, 2.0] {
        let r = pair(RunConfig::all_to_all(Method::Dtwa, 49, jr), BENCH_TRAJECTORIES);
        let ok = r.max_rel_dev_xi2 < 0.05 && r.max_rel_dev_fq < 0.05;
        pass &= ok;
        lines.push(format!(
            "N=49 Jr={jr}: ξ² {:.2}%, F_Q {:.2}%",
            100.0 * r.max_rel_dev_xi2,
            100.0 * r.max_rel_dev_fq
        ));
    }
    // the antisymmetric benchmark runs at the drive that optimizes the exact ξ²
    let mut scan = RunConfig::all_to_all(Method::ExactSymmetric, 100, -1.0);
    scan.drive.scan = Some(criterion_7_scan());
    let omega = run_single(&scan).unwrap().record.omega_opt;
    let mut anti = RunConfig::all_to_all(Method::Dtwa, 100, -1.0);
    anti.drive.omega = omega;
    let r = pair(anti, BENCH_TRAJECTORIES);
    let ok = r.max_rel_dev_xi2 < 0.05 && r.max_rel_dev_fq < 0.05;
    pass &= ok;
    lines.push(format!(
        "N=100 Jr=-1 Ω={omega:.2}: ξ² {:.2}% (min {:.4} vs exact {:.4}), F_Q {:.2}%",
        100.0 * r.max_rel_dev_xi2,
        r.xi2_min_test.value,
        r.xi2_min_reference.value,
        100.0 * r.max_rel_dev_fq
    ));
    for jr in [0.5, 1.0, 2.0] {
        let mut c = RunConfig::all_to_all(Method::Dtwa, 9, jr);
        c.geometry = GeometrySpec::square(3, 3);
        c.coupling = CouplingSpec::dipolar(jr);
        let r = pair(c, BENCH_TRAJECTORIES);
        let ok = r.fq_peak_time_rel_dev < 0.10 && r.fq_peak_height_rel_dev < 0.20;
        pass &= ok;
        lines.push(format!(
            "3×3 dipolar Jr={jr}: F_Q peak time {:.2}%, height {:.2}%",
            100.0 * r.fq_peak_time_rel_dev,
            100.0 * r.fq_peak_height_rel_dev
        ));
    }
    report(9, pass, &lines.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_sweep_determinism() {
    let mut c = RunConfig::all_to_all(Method::Dtwa, 3, 1.0);
    c.geometry = GeometrySpec::square(3, 3);
    c.coupling = CouplingSpec::dipolar(0.5);
    c.time_grid.points = 60;
    c.dtwa.trajectories = 300;
    c.dtwa.seed = 77;
    c.sweep = Some(SweepSpec {
        sizes: vec![2, 3, 4],
        fit_window: None,
    });
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (k, threads) in [1usize, 3, 1].into_iter().enumerate() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| run_scaling(&c)).unwrap();
        let path = dir.path().join(format!("sweep{k}.csv"));
        write_records(&path, &out.records).unwrap();
        files.push(std::fs::read(&path).unwrap());
    }
    let mut other = c.clone();
    other.dtwa.seed = 78;
    let path = dir.path().join("other.csv");
    write_records(&path, &run_scaling(&other).unwrap().records).unwrap();
    let differs = std::fs::read(&path).unwrap() != files[0];
    let pass = files.iter().all(|f| *f == files[0]) && differs;
    report(
        10,
        pass,
        &format!("3 reruns (1, 3, 1 threads) byte-identical: {}; other seed differs: {differs}", files.iter().all(|f| *f == files[0])),
    );
    assert!(pass);
}

const BENCH_TRAJECTORIES: usize = 5000;
