//! Generalized discrete truncated Wigner approximation (gdTWA) for SU(3)
//! spins: sampled phase points evolve under mean-field equations, and
//! collective moments are estimated from the trajectory ensemble.
//!
//! Trajectory `k` draws its phase point from the ChaCha stream `k` of the
//! master seed, trajectories are integrated in fixed batches, and ensemble
//! sums run sequentially in trajectory order, so results are bit-identical
//! for any thread count.

pub mod integrate;
pub mod model;
pub mod sampling;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use integrate::{integrate_batch, IntegratorConfig, IntegratorMethod};
pub use model::{MeanFieldModel, DIM};
pub use sampling::SiteSampler;

use crate::algebra::{expand_in_basis, spin_quadrupolar_basis, Expansion, ManifoldTriple, OperatorBasis};
use crate::error::DtwaError;
use crate::lattice::HamiltonianSpec;
use crate::metrology::{squeezing_and_fisher, SpinMoments, SqueezingResult};

fn default_trajectories() -> usize {
    5000
}

fn default_batch() -> usize {
    16
}

fn default_resamples() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtwaConfig {
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Trajectories integrated together with a shared adaptive step.
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

impl Default for DtwaConfig {
    fn default() -> Self {
        Self {
            trajectories: default_trajectories(),
            seed: 0,
            integrator: IntegratorConfig::default(),
            batch_size: default_batch(),
            bootstrap_resamples: default_resamples(),
        }
    }
}

/// Per-trajectory values kept at every grid time: the collective sums
/// `S_k` and the classical estimators of `<½{S_k, S_l}>`.
pub type TrajectoryRow = [f64; 9];

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Estimators for the collective sums of a manifold triple.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleEstimator {
    single: [Expansion; 3],
}

impl TripleEstimator {
    pub fn new(triple: &ManifoldTriple, basis: &OperatorBasis) -> Result<Self, DtwaError> {
        let ops = triple.ops();
        Ok(Self {
            single: [
                expand_in_basis(&ops[0], basis)?,
                expand_in_basis(&ops[1], basis)?,
                expand_in_basis(&ops[2], basis)?,
            ],
        })
    }

    /// Row for trajectory `b` of a batch. Second moments are the classical
    /// products `S_k S_l`, the phase-space symbol of `½{S_k, S_l}`.
    pub fn row(&self, y: &nalgebra::DMatrix<f64>, b: usize) -> TrajectoryRow {
        let mut sums = [0.0; 3];
        for i in 0..y.nrows() {
            let lam = model::site(y, b, i);
            for k in 0..3 {
                sums[k] += self.single[k].evaluate(&lam);
            }
        }
        let mut row = [0.0; 9];
        row[..3].copy_from_slice(&sums);
        for (p, &(k, l)) in PAIRS.iter().enumerate() {
            row[3 + p] = sums[k] * sums[l];
        }
        row
    }
}

/// Largest invariant drifts seen along any trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_casimir_drift: f64,
    /// `|E(t) - E(0)| / max(1, |E(0)|)`.
    pub max_energy_drift: f64,
}

impl Diagnostics {
    fn merge(&mut self, other: &Diagnostics) {
        self.max_casimir_drift = self.max_casimir_drift.max(other.max_casimir_drift);
        self.max_energy_drift = self.max_energy_drift.max(other.max_energy_drift);
    }
}

/// Ensemble data on the shared time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    pub seed: u64,
    pub n_atoms: usize,
    /// `rows[t][k]` for time index `t` and trajectory `k`.
    pub rows: Vec<Vec<TrajectoryRow>>,
    pub diagnostics: Diagnostics,
}

/// Bootstrap standard errors at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapErrors {
    pub mean: [f64; 3],
    pub cov: [[f64; 3]; 3],
    pub xi2: f64,
    pub fq: f64,
}

impl TrajectoryEnsemble {
    pub fn n_trajectories(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    fn moments_from(&self, t: usize, weights: Option<&[u32]>) -> SpinMoments {
        let rows = &self.rows[t];
        let mut acc = [0.0; 9];
        let mut total = 0.0;
        for (k, row) in rows.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[k] as f64);
            if w == 0.0 {
                continue;
            }
            for c in 0..9 {
                acc[c] += w * row[c];
            }
            total += w;
        }
        let avg: [f64; 9] = acc.map(|v| v / total);
        let mean = [avg[0], avg[1], avg[2]];
        let mut cov = [[0.0; 3]; 3];
        for (p, &(k, l)) in PAIRS.iter().enumerate() {
            let c = avg[3 + p] - mean[k] * mean[l];
            cov[k][l] = c;
            cov[l][k] = c;
        }
        SpinMoments {
            mean,
            cov,
            n_atoms: self.n_atoms,
            stderr: None,
        }
    }

    /// Ensemble moments at time index `t`.
    pub fn moments(&self, t: usize) -> SpinMoments {
        self.moments_from(t, None)
    }

    /// Multinomial resampling counts, one row per resample, drawn from a
    /// stream reserved for bootstrapping.
    pub fn resample_counts(&self, resamples: usize) -> Vec<Vec<u32>> {
        let m = self.n_trajectories();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        (0..resamples)
            .map(|_| {
                let mut counts = vec![0u32; m];
                for _ in 0..m {
                    counts[rng.gen_range(0..m)] += 1;
                }
                counts
            })
            .collect()
    }

    /// Bootstrap errors at time `t` for the given resampling counts.
    pub fn bootstrap(&self, t: usize, counts: &[Vec<u32>], antisymmetric: bool) -> BootstrapErrors {
        let samples: Vec<(SpinMoments, SqueezingResult)> = counts
            .iter()
            .map(|w| {
                let m = self.moments_from(t, Some(w));
                let r = squeezing_and_fisher(&m, antisymmetric);
                (m, r)
            })
            .collect();
        let sd = |values: &mut dyn Iterator<Item = f64>| -> f64 {
            let v: Vec<f64> = values.collect();
            let n = v.len() as f64;
            if v.len() < 2 {
                return 0.0;
            }
            let mean = v.iter().sum::<f64>() / n;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        BootstrapErrors {
            mean: std::array::from_fn(|k| sd(&mut samples.iter().map(|s| s.0.mean[k]))),
            cov: std::array::from_fn(|k| std::array::from_fn(|l| sd(&mut samples.iter().map(|s| s.0.cov[k][l])))),
            xi2: sd(&mut samples.iter().map(|s| s.1.xi2)),
            fq: sd(&mut samples.iter().map(|s| s.1.fq)),
        }
    }
}

/// Runs the ensemble for a product initial state `site_state^{⊗N}`.
pub fn run_ensemble(
    spec: &HamiltonianSpec,
    site_state: &Vector3<C64>,
    triple: &ManifoldTriple,
    times: &[f64],
    config: &DtwaConfig,
) -> Result<TrajectoryEnsemble, DtwaError> {
    if config.trajectories == 0 {
        return Err(DtwaError::EmptyEnsemble);
    }
    if config.batch_size == 0 {
        return Err(DtwaError::BadConfig("batch_size must be positive".into()));
    }
    config.integrator.validate()?;
    integrate::check_grid(times)?;
    let basis = spin_quadrupolar_basis();
    let model = MeanFieldModel::new(spec, &basis)?;
    let sampler = SiteSampler::new(site_state, &basis)?;
    let estimator = TripleEstimator::new(triple, &basis)?;
    let n = model.n_sites();
    let n_batches = config.trajectories.div_ceil(config.batch_size);

    let batches: Vec<(Vec<Vec<TrajectoryRow>>, Diagnostics)> = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let first = batch * config.batch_size;
            let last = (first + config.batch_size).min(config.trajectories);
            let initial: Vec<Vec<[f64; DIM]>> = (first..last)
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(k as u64);
                    (0..n).map(|_| sampler.sample(&mut rng)).collect()
                })
                .collect();
            run_batch(&model, &estimator, &initial, times, &config.integrator)
        })
        .collect::<Result<_, DtwaError>>()?;

    let mut rows: Vec<Vec<TrajectoryRow>> = vec![Vec::with_capacity(config.trajectories); times.len()];
    let mut diagnostics = Diagnostics::default();
    for (batch_rows, diag) in batches {
        diagnostics.merge(&diag);
        for (t, r) in batch_rows.into_iter().enumerate() {
            rows[t].extend(r);
        }
    }
    if diagnostics.max_casimir_drift > config.integrator.casimir_tolerance {
        return Err(DtwaError::CasimirDrift {
            drift: diagnostics.max_casimir_drift,
            tolerance: config.integrator.casimir_tolerance,
        });
    }
    Ok(TrajectoryEnsemble {
        times: times.to_vec(),
        seed: config.seed,
        n_atoms: n,
        rows,
        diagnostics,
    })
}

/// Integrates one batch; returns rows indexed `[time][trajectory in batch]`.
fn run_batch(
    model: &MeanFieldModel,
    estimator: &TripleEstimator,
    initial: &[Vec<[f64; DIM]>],
    times: &[f64],
    config: &IntegratorConfig,
) -> Result<(Vec<Vec<TrajectoryRow>>, Diagnostics), DtwaError> {
    let y0 = model::pack(initial);
    let b = initial.len();
    let mut scratch = y0.clone();
    let casimir0: Vec<Vec<f64>> = (0..b).map(|k| model::casimirs(&y0, k)).collect();
    let energy0 = model.energies(&y0, &mut scratch);
    let mut rows = Vec::with_capacity(times.len());
    let mut diag = Diagnostics::default();
    integrate_batch(model, y0, times, config, |_, y| {
        rows.push((0..b).map(|k| estimator.row(y, k)).collect());
        let energies = model.energies(y, &mut scratch);
        for k in 0..b {
            for (c, c0) in model::casimirs(y, k).iter().zip(&casimir0[k]) {
                diag.max_casimir_drift = diag.max_casimir_drift.max((c - c0).abs());
            }
            let drift = (energies[k] - energy0[k]).abs() / energy0[k].abs().max(1.0);
            diag.max_energy_drift = diag.max_energy_drift.max(drift);
        }
    })?;
    Ok((rows, diag))
}

/// Mean-field evolution of a single deterministic phase point (no
/// sampling): every site starts from `lambdas`.
pub fn mean_field_trajectory(
    spec: &HamiltonianSpec,
    lambdas: [f64; DIM],
    times: &[f64],
    config: &IntegratorConfig,
) -> Result<Vec<Vec<[f64; DIM]>>, DtwaError> {
    let basis = spin_quadrupolar_basis();
    let model = MeanFieldModel::new(spec, &basis)?;
    let y0 = model::pack(&[vec![lambdas; model.n_sites()]]);
    let mut out = Vec::with_capacity(times.len());
    integrate_batch(&model, y0, times, config, |_, y| {
        out.push((0..y.nrows()).map(|i| model::site(y, 0, i)).collect());
    })?;
    Ok(out)
}
