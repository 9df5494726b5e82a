//! Single runs, drive optimization, size sweeps with power-law fits, and
//! dTWA-versus-exact comparisons.

pub mod config;
pub mod fit;
pub mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{apply_override, mean_coupling, BenchSpec, DriveSpec, Method, OmegaScan, RunConfig, SweepSpec, TimeGrid};
pub use fit::{power_law_fit, FitResult};

use crate::algebra::{manifold_triple, ManifoldLabel};
use crate::dtwa::{run_ensemble, Diagnostics};
use crate::error::{ExactError, ExperimentError};
use crate::exact::{evolve_with, ClosedFormPropagator, CollectiveTriple, ExactBasis, MomentWorkspace};
use crate::lattice::{coupling_matrix, initial_state, HamiltonianSpec};
use crate::metrology::{optimize_over_drive, optimize_over_time, squeezing_and_fisher, SqueezingResult, TimeOptimum};

/// Squeezing and Fisher information along the time grid of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub results: Vec<SqueezingResult>,
    /// Bootstrap standard errors `[ξ², F_Q]` per time (dTWA only).
    pub stderr: Option<Vec<[f64; 2]>>,
    pub diagnostics: Option<Diagnostics>,
}

impl Trace {
    pub fn xi2(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.xi2).collect()
    }

    pub fn fq(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.fq).collect()
    }
}

/// One optimized run, as persisted in sweep CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub jr: f64,
    pub alpha: u32,
    pub method: Method,
    pub manifold: ManifoldLabel,
    pub omega_opt: f64,
    pub t_opt: f64,
    pub xi2_min: f64,
    /// `2ξ²_min` for antisymmetric runs.
    pub xi2_a_min: Option<f64>,
    pub fq_max: f64,
    pub t_fq: f64,
    pub xi2_stderr: Option<f64>,
    pub fq_stderr: Option<f64>,
    pub seed: Option<u64>,
    pub xi2_at_boundary: bool,
    pub fq_at_boundary: bool,
    pub omega_at_boundary: bool,
}

impl SweepRecord {
    /// `ξ²_A` for antisymmetric runs, `ξ²` otherwise.
    pub fn reported_xi2(&self) -> f64 {
        self.xi2_a_min.unwrap_or(self.xi2_min)
    }
}

/// Time optimum of one drive value in a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSample {
    pub omega: f64,
    pub xi2_min: f64,
    pub fq_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// Trace at the selected drive.
    pub trace: Trace,
    pub record: SweepRecord,
    /// Every drive value evaluated, sorted by `Ω` (one entry without a scan).
    pub omega_samples: Vec<OmegaSample>,
    pub warnings: Vec<String>,
}

/// Evolves the configured initial state at drive `omega` and evaluates the
/// manifold moments on the time grid.
pub fn simulate_trace(config: &RunConfig, omega: f64) -> Result<Trace, ExperimentError> {
    let geometry = config.geometry.build()?;
    let couplings = coupling_matrix(&geometry, &config.coupling)?;
    let n = couplings.n_sites();
    let antisymmetric = config.antisymmetric();
    let times = config.time_grid.times(n, mean_coupling(&couplings), antisymmetric);
    let spec = HamiltonianSpec {
        couplings,
        drive_omega: omega,
        omega1: config.drive.ladder[0],
        omega2: config.drive.ladder[1],
    };
    let state = initial_state(&config.initial_state(), n)?;
    let triple = manifold_triple(config.manifold())?;

    if config.method == Method::Dtwa {
        let ensemble = run_ensemble(&spec, &state.site_amplitudes, &triple, &times, &config.dtwa)?;
        let counts = ensemble.resample_counts(config.dtwa.bootstrap_resamples);
        let mut results = Vec::with_capacity(times.len());
        let mut stderr = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            results.push(squeezing_and_fisher(&ensemble.moments(k), antisymmetric));
            let e = ensemble.bootstrap(k, &counts, antisymmetric);
            stderr.push([e.xi2, e.fq]);
        }
        return Ok(Trace {
            times,
            results,
            stderr: Some(stderr),
            diagnostics: Some(ensemble.diagnostics),
        });
    }

    let basis = match config.method {
        Method::ExactSymmetric => ExactBasis::symmetric(n)?,
        _ => ExactBasis::full(n, config.full_cap)?,
    };
    let tri = CollectiveTriple::new(&basis, &triple);
    let mut work = MomentWorkspace::default();
    let mut results = Vec::with_capacity(times.len());
    let observe = |_: usize, psi: &crate::exact::StateVector| -> Result<(), ExactError> {
        results.push(squeezing_and_fisher(&tri.moments_with(psi, &mut work)?, antisymmetric));
        Ok(())
    };
    match &basis {
        ExactBasis::Symmetric(sb) if config.drive.ladder == [0.0, 0.0] => {
            let j1 = spec.couplings.uniform.unwrap_or(config.coupling.j1);
            let c = state.site_amplitudes;
            ClosedFormPropagator::new(sb.clone(), j1, config.coupling.jr, omega, [c[0], c[1], c[2]])?
                .evolve_with(&times, observe)?;
        }
        _ => {
            let h = basis.hamiltonian(&spec)?;
            let psi0 = basis.product_state(&state)?;
            evolve_with(&h, &psi0, &times, &config.krylov, observe)?;
        }
    }
    Ok(Trace {
        times,
        results,
        stderr: None,
        diagnostics: None,
    })
}

struct Evaluated {
    omega: f64,
    trace: Trace,
    optimum: TimeOptimum,
}

fn evaluate(config: &RunConfig, omegas: &[f64]) -> Result<Vec<Evaluated>, ExperimentError> {
    omegas
        .par_iter()
        .map(|&omega| {
            let trace = simulate_trace(config, omega)?;
            let optimum = optimize_over_time(&trace.times, &trace.results)?;
            Ok(Evaluated { omega, trace, optimum })
        })
        .collect()
}

/// Runs one configuration, optimizing over the drive when a scan is set.
pub fn run_single(config: &RunConfig) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let n = config.n_sites();
    let mut evaluated = match &config.drive.scan {
        None => evaluate(config, &[config.drive.omega])?,
        Some(scan) => {
            let geometry = config.geometry.build()?;
            let j = mean_coupling(&coupling_matrix(&geometry, &config.coupling)?);
            let mut all = evaluate(config, &scan.initial_values(n, j))?;
            for _ in 0..scan.refine_rounds {
                all.sort_by(|a, b| a.omega.total_cmp(&b.omega));
                let best = optimize_over_drive(&samples_of(&all))?;
                let b = all.iter().position(|e| e.omega == best.omega).expect("selected sample");
                let lo = all[b.saturating_sub(1)].omega;
                let hi = all[(b + 1).min(all.len() - 1)].omega;
                let fresh: Vec<f64> = (1..=scan.refine_points)
                    .map(|q| lo + (hi - lo) * q as f64 / (scan.refine_points + 1) as f64)
                    .filter(|w| all.iter().all(|e| (e.omega - w).abs() > 1e-12 * w.abs().max(1.0)))
                    .collect();
                all.extend(evaluate(config, &fresh)?);
            }
            all
        }
    };
    evaluated.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let samples = samples_of(&evaluated);
    let (chosen, omega_at_boundary) = if evaluated.len() >= 3 {
        let d = optimize_over_drive(&samples)?;
        let idx = evaluated.iter().position(|e| e.omega == d.omega).expect("selected sample");
        (idx, d.at_boundary)
    } else {
        (0, false)
    };
    let best = evaluated.swap_remove(chosen);
    let opt = &best.optimum;
    let dtwa = config.method == Method::Dtwa;
    let stderr_at = |i: usize, c: usize| best.trace.stderr.as_ref().map(|s| s[i][c]);
    let record = SweepRecord {
        n,
        jr: config.coupling.jr,
        alpha: config.coupling.alpha,
        method: config.method,
        manifold: config.manifold(),
        omega_opt: best.omega,
        t_opt: opt.xi2.time,
        xi2_min: opt.xi2.value,
        xi2_a_min: config.antisymmetric().then_some(2.0 * opt.xi2.value),
        fq_max: opt.fq.value,
        t_fq: opt.fq.time,
        xi2_stderr: stderr_at(opt.xi2.index, 0),
        fq_stderr: stderr_at(opt.fq.index, 1),
        seed: dtwa.then_some(config.dtwa.seed),
        xi2_at_boundary: opt.xi2.at_boundary,
        fq_at_boundary: opt.fq.at_boundary,
        omega_at_boundary,
    };
    let mut warnings = Vec::new();
    if record.xi2_at_boundary {
        warnings.push(format!("N = {n}: squeezing optimum at the edge of the time window"));
    }
    if record.fq_at_boundary {
        warnings.push(format!("N = {n}: Fisher-information optimum at the edge of the time window"));
    }
    if omega_at_boundary {
        warnings.push(format!("N = {n}: drive optimum at the edge of the scan (Ω = {})", best.omega));
    }
    Ok(RunOutput {
        trace: best.trace,
        record,
        omega_samples: samples
            .iter()
            .map(|&(omega, xi2_min, fq_max)| OmegaSample { omega, xi2_min, fq_max })
            .collect(),
        warnings,
    })
}

fn samples_of(all: &[Evaluated]) -> Vec<(f64, f64, f64)> {
    all.iter()
        .map(|e| (e.omega, e.optimum.xi2.value, e.optimum.fq.value))
        .collect()
}

/// Seed of sweep member `size`, derived from the master seed.
pub fn member_seed(master: u64, size: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = master ^ (size as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingOutput {
    /// Sorted by `N`.
    pub records: Vec<SweepRecord>,
    pub xi2_fit: FitResult,
    pub fq_fit: FitResult,
    pub warnings: Vec<String>,
}

/// Default fit window: `N ≥ 200` for antisymmetric all-to-all sweeps, all
/// sizes otherwise.
pub fn default_fit_window(config: &RunConfig) -> [f64; 2] {
    if config.antisymmetric() && config.coupling.is_all_to_all() {
        [200.0, f64::INFINITY]
    } else {
        [0.0, f64::INFINITY]
    }
}

/// Runs every sweep member (in parallel) and fits `ξ²_min` and `F_Q,max`
/// against `N`.
pub fn run_scaling(config: &RunConfig) -> Result<ScalingOutput, ExperimentError> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("missing `sweep` section".into()))?;
    let members: Vec<RunConfig> = sweep
        .sizes
        .iter()
        .map(|&s| {
            let mut c = config.with_size(s);
            c.dtwa.seed = member_seed(config.dtwa.seed, s);
            c
        })
        .collect();
    let outputs: Vec<RunOutput> = members
        .par_iter()
        .map(|c| {
            run_single(c).map_err(|e| ExperimentError::Member {
                n: c.n_sites(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut warnings: Vec<String> = outputs.iter().flat_map(|o| o.warnings.clone()).collect();
    let mut records: Vec<SweepRecord> = outputs.into_iter().map(|o| o.record).collect();
    records.sort_by_key(|r| r.n);
    let window = sweep.fit_window.unwrap_or_else(|| default_fit_window(config));
    let xi: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.reported_xi2())).collect();
    let fq: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.fq_max)).collect();
    let xi2_fit = power_law_fit(&xi, window)?;
    let fq_fit = power_law_fit(&fq, window)?;
    warnings.sort();
    Ok(ScalingOutput {
        records,
        xi2_fit,
        fq_fit,
        warnings,
    })
}

/// First sample that is the extreme value of its `±w` neighborhood
/// (`w = max(1, len/100)`); the global extreme when none qualifies. Tiny
/// ripples and sampling noise therefore do not count as extrema.
pub fn first_extremum(values: &[f64], maximum: bool) -> usize {
    let len = values.len();
    let w = (len / 100).max(1);
    let better = |a: f64, b: f64| if maximum { a > b } else { a < b };
    for j in 1..len.saturating_sub(1) {
        let lo = j.saturating_sub(w);
        let hi = (j + w).min(len - 1);
        if hi == j {
            break;
        }
        if (lo..=hi).all(|i| i == j || !better(values[i], values[j])) && better(values[j], values[j - 1]) {
            return j;
        }
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if better(v, values[best]) {
            best = i;
        }
    }
    best
}

/// Position and height of a trace feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub time: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n: usize,
    pub jr: f64,
    pub omega: f64,
    pub times: Vec<f64>,
    pub xi2_test: Vec<f64>,
    pub xi2_reference: Vec<f64>,
    pub fq_test: Vec<f64>,
    pub fq_reference: Vec<f64>,
    /// End of the comparison windows: first `ξ²` minimum and first `F_Q`
    /// maximum of the reference.
    pub xi2_window_end: f64,
    pub fq_window_end: f64,
    /// Largest `|test - ref|/ref` inside the windows.
    pub max_rel_dev_xi2: f64,
    pub max_rel_dev_fq: f64,
    /// Relative deviation of the `ξ²` value at the reference minimum.
    pub rel_dev_at_xi2_min: f64,
    pub xi2_min_reference: Feature,
    pub xi2_min_test: Feature,
    pub fq_peak_reference: Feature,
    pub fq_peak_test: Feature,
    pub fq_peak_time_rel_dev: f64,
    pub fq_peak_height_rel_dev: f64,
}

/// Compares `test` (typically dTWA) against `reference` (an exact method)
/// on identical physics and time grids.
pub fn benchmark_compare(test: &RunConfig, reference: &RunConfig) -> Result<BenchmarkReport, ExperimentError> {
    test.validate()?;
    reference.validate()?;
    let same_physics = test.geometry == reference.geometry
        && test.coupling == reference.coupling
        && test.initial_state() == reference.initial_state()
        && test.manifold() == reference.manifold()
        && test.drive.omega == reference.drive.omega
        && test.drive.ladder == reference.drive.ladder;
    if !same_physics {
        return Err(ExperimentError::Config("benchmark configs describe different physics".into()));
    }
    let omega = test.drive.omega;
    let (a, b) = rayon::join(|| simulate_trace(test, omega), || simulate_trace(reference, omega));
    let (a, b) = (a?, b?);
    if a.times != b.times {
        return Err(ExperimentError::MismatchedGrids);
    }
    let (xa, xb, fa, fb) = (a.xi2(), b.xi2(), a.fq(), b.fq());
    let rel = |x: f64, y: f64| if x == y { 0.0 } else { ((x - y) / y).abs() };
    let k_xi = first_extremum(&xb, false);
    let k_fq = first_extremum(&fb, true);
    let max_dev = |u: &[f64], v: &[f64], end: usize| (0..=end).map(|k| rel(u[k], v[k])).fold(0.0, f64::max);
    let feature = |v: &[f64], k: usize| Feature {
        time: a.times[k],
        value: v[k],
    };
    let k_xi_test = first_extremum(&xa, false);
    let k_fq_test = first_extremum(&fa, true);
    Ok(BenchmarkReport {
        n: test.n_sites(),
        jr: test.coupling.jr,
        omega,
        xi2_window_end: a.times[k_xi],
        fq_window_end: a.times[k_fq],
        max_rel_dev_xi2: max_dev(&xa, &xb, k_xi),
        max_rel_dev_fq: max_dev(&fa, &fb, k_fq),
        rel_dev_at_xi2_min: rel(xa[k_xi], xb[k_xi]),
        xi2_min_reference: feature(&xb, k_xi),
        xi2_min_test: feature(&xa, k_xi_test),
        fq_peak_reference: feature(&fb, k_fq),
        fq_peak_test: feature(&fa, k_fq_test),
        fq_peak_time_rel_dev: rel(a.times[k_fq_test], a.times[k_fq]),
        fq_peak_height_rel_dev: rel(fa[k_fq_test], fb[k_fq]),
        times: a.times,
        xi2_test: xa,
        xi2_reference: xb,
        fq_test: fa,
        fq_reference: fb,
    })
}
