//! Lanczos propagation of `exp(-iHt)|ψ>` for Hermitian sparse `H`.
//!
//! Each step builds an `m`-dimensional Krylov space once, diagonalizes the
//! tridiagonal projection and then picks the longest step whose a posteriori
//! error estimate `β_m |[exp(-iT dt) e₁]_m|` stays below the step tolerance.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::ExactError;
use crate::exact::sparse::SparseOperator;
use crate::exact::StateVector;

/// Allowed deviation of `‖ψ‖` from 1 after any step.
pub const NORM_TOLERANCE: f64 = 1e-8;

fn default_dim() -> usize {
    30
}

fn default_step_tol() -> f64 {
    1e-10
}

fn default_reorth_limit() -> usize {
    200_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovConfig {
    #[serde(default = "default_dim")]
    pub krylov_dim: usize,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
    /// Full reorthogonalization is used for Hilbert spaces up to this size.
    #[serde(default = "default_reorth_limit")]
    pub reorthogonalize_below: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            krylov_dim: default_dim(),
            step_tol: default_step_tol(),
            reorthogonalize_below: default_reorth_limit(),
        }
    }
}

fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

struct KrylovSpace {
    vectors: Vec<Vec<C64>>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    /// `β_m`; zero after an invariant subspace was found.
    residual: f64,
}

impl KrylovSpace {
    fn build(h: &SparseOperator, psi: &[C64], m: usize, reorth: bool) -> Result<Self, String> {
        let beta0 = norm(psi);
        if beta0 == 0.0 || !beta0.is_finite() {
            return Err("zero or non-finite state".into());
        }
        let mut vectors = vec![psi.iter().map(|z| z / beta0).collect::<Vec<_>>()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut w = vec![C64::new(0.0, 0.0); psi.len()];
        let mut residual = 0.0;
        for j in 0..m {
            h.matvec_into(&vectors[j], &mut w);
            let a = dotc(&vectors[j], &w).re;
            alpha.push(a);
            for (wi, vi) in w.iter_mut().zip(&vectors[j]) {
                *wi -= vi * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (wi, vi) in w.iter_mut().zip(&vectors[j - 1]) {
                    *wi -= vi * b;
                }
            }
            if reorth {
                for v in &vectors {
                    let c = dotc(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= vi * c;
                    }
                }
            }
            let b = norm(&w);
            if !b.is_finite() {
                return Err("non-finite Lanczos coefficient".into());
            }
            let anorm = alpha.iter().map(|x| x.abs()).fold(0.0, f64::max) + beta.iter().fold(0.0, |acc: f64, x| acc.max(*x));
            if b <= 1e-12 * anorm.max(f64::MIN_POSITIVE) {
                residual = 0.0;
                break;
            }
            if j + 1 == m {
                residual = b;
                break;
            }
            beta.push(b);
            vectors.push(w.iter().map(|z| z / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        vectors.truncate(k);
        Ok(Self {
            vectors,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
            residual,
        })
    }

    /// `exp(-iT dt) e₁` in the Lanczos basis.
    fn coefficients(&self, dt: f64) -> Vec<C64> {
        let k = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let weights: Vec<C64> = (0..k)
            .map(|s| C64::from_polar(q[(0, s)], -self.eigenvalues[s] * dt))
            .collect();
        (0..k)
            .map(|r| (0..k).map(|s| weights[s] * q[(r, s)]).sum())
            .collect()
    }

    fn error_estimate(&self, coeffs: &[C64]) -> f64 {
        self.residual * coeffs.last().map(|c| c.norm()).unwrap_or(0.0)
    }

    fn combine(&self, coeffs: &[C64], scale: f64, out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (v, c) in self.vectors.iter().zip(coeffs) {
            let c = c * scale;
            for (o, vi) in out.iter_mut().zip(v) {
                *o += vi * c;
            }
        }
    }
}

fn check_grid(times: &[f64]) -> Result<(), ExactError> {
    if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(ExactError::BadTimeGrid);
    }
    Ok(())
}

/// Streams `ψ(t)` for each grid time to `observer`.
pub fn evolve_with<F>(
    h: &SparseOperator,
    psi0: &StateVector,
    times: &[f64],
    config: &KrylovConfig,
    mut observer: F,
) -> Result<(), ExactError>
where
    F: FnMut(usize, &StateVector) -> Result<(), ExactError>,
{
    if h.dim() != psi0.amps.len() {
        return Err(ExactError::DimensionMismatch {
            op: h.dim(),
            state: psi0.amps.len(),
        });
    }
    check_grid(times)?;
    let reorth = h.dim() <= config.reorthogonalize_below;
    let m = config.krylov_dim.max(2).min(h.dim().max(1));
    let mut psi = psi0.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); h.dim()];
    let mut t = 0.0;
    let mut dt_guess = f64::INFINITY;
    for (k, &target) in times.iter().enumerate() {
        while t < target {
            let space = KrylovSpace::build(h, &psi.amps, m, reorth)
                .map_err(|reason| ExactError::KrylovBreakdown { t, reason })?;
            let scale = norm(&psi.amps);
            let mut dt = (target - t).min(dt_guess * 2.0);
            let coeffs = loop {
                let c = space.coefficients(dt);
                let err = space.error_estimate(&c) * scale;
                if err <= config.step_tol {
                    break c;
                }
                let shrink = 0.9 * (config.step_tol / err).powf(1.0 / m as f64);
                dt *= shrink.clamp(0.05, 0.9);
                if dt <= 1e-15 * target.max(1.0) {
                    return Err(ExactError::KrylovBreakdown {
                        t,
                        reason: format!("step size underflow (error estimate {err:.3e})"),
                    });
                }
            };
            space.combine(&coeffs, scale, &mut scratch);
            std::mem::swap(&mut psi.amps, &mut scratch);
            if dt < target - t {
                dt_guess = dt;
                t += dt;
            } else {
                t = target;
            }
            let drift = (norm(&psi.amps) - 1.0).abs();
            if drift > NORM_TOLERANCE {
                return Err(ExactError::NormDrift { t, drift });
            }
        }
        observer(k, &psi)?;
    }
    Ok(())
}

/// Collects `ψ(t)` on the grid (keep grids short for large spaces).
pub fn evolve(
    h: &SparseOperator,
    psi0: &StateVector,
    times: &[f64],
    config: &KrylovConfig,
) -> Result<Vec<StateVector>, ExactError> {
    let mut out = Vec::with_capacity(times.len());
    evolve_with(h, psi0, times, config, |_, s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}
