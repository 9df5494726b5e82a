//! Discrete phase-point sampling.
//!
//! Each site state `ψ` is completed to an orthonormal frame `{ψ, u, v}` and
//! the eight generalized Gell-Mann matrices of that frame are sampled
//! independently from their eigenvalues with Born-rule weights. The frame
//! makes every on-site symmetric correlation `<½{Λ_a, Λ_b}>` factorize, so
//! drawn points reproduce the quantum first and second moments exactly in
//! expectation. Samples are then rotated into the spin-quadrupolar basis.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::algebra::{expand_general, Generator, OperatorBasis, OperatorMatrix};
use crate::error::DtwaError;

const DEGENERACY_TOL: f64 = 1e-9;
const PROBABILITY_TOL: f64 = 1e-10;

/// Distinct eigenvalues of one generator with their probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorDistribution {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl GeneratorDistribution {
    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.values.iter().zip(&self.probabilities).map(|(v, p)| v * v * p).sum()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probabilities) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        // u landed in the rounding gap above the cumulative sum
        let last = self.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        self.values[last]
    }
}

/// Sampling tables for one single-site state.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteSampler {
    /// Distributions of the frame generators, in [`frame_generators`] order.
    pub distributions: [GeneratorDistribution; 8],
    /// `rotation[a][b] = ½ tr(L_a G_b)`: frame generator `b` → basis generator `a`.
    pub rotation: [[f64; 8]; 8],
}

/// Orthonormal frame whose first column is `ψ`; the rest are completed from
/// the level states in order.
pub fn state_frame(psi: &Vector3<C64>) -> Matrix3<C64> {
    let mut cols: Vec<Vector3<C64>> = vec![*psi];
    for k in 0..3 {
        let mut v = Vector3::zeros();
        v[k] = C64::new(1.0, 0.0);
        for c in &cols {
            v -= c * c.dotc(&v);
        }
        let norm = v.norm();
        if norm > 1e-6 && cols.len() < 3 {
            cols.push(v / C64::new(norm, 0.0));
        }
    }
    Matrix3::from_columns(&cols)
}

/// Generalized Gell-Mann matrices of a frame `{e₁, e₂, e₃}`:
/// `X₁₂, Y₁₂, X₁₃, Y₁₃, X₂₃, Y₂₃, Z₁₂, (e₁e₁† + e₂e₂† − 2e₃e₃†)/√3`.
pub fn frame_generators(frame: &Matrix3<C64>) -> [OperatorMatrix; 8] {
    let e: [Vector3<C64>; 3] = std::array::from_fn(|k| frame.column(k).into_owned());
    let i = C64::new(0.0, 1.0);
    let x = |j: usize, k: usize| OperatorMatrix::outer(&e[j], &e[k]) + OperatorMatrix::outer(&e[k], &e[j]);
    let y = |j: usize, k: usize| {
        OperatorMatrix::outer(&e[j], &e[k]).scale_complex(-i) + OperatorMatrix::outer(&e[k], &e[j]).scale_complex(i)
    };
    let p = |j: usize| OperatorMatrix::outer(&e[j], &e[j]);
    [
        x(0, 1),
        y(0, 1),
        x(0, 2),
        y(0, 2),
        x(1, 2),
        y(1, 2),
        p(0) - p(1),
        (p(0) + p(1) - p(2) * 2.0) * (1.0 / 3f64.sqrt()),
    ]
}

impl SiteSampler {
    pub fn new(state: &Vector3<C64>, basis: &OperatorBasis) -> Result<Self, DtwaError> {
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(DtwaError::NotNormalized(norm));
        }
        let frame = frame_generators(&state_frame(state));
        let mut out = Vec::with_capacity(8);
        for (g, label) in frame.iter().zip(Generator::ALL) {
            out.push(distribution(g.matrix(), state, label.label())?);
        }
        let mut rotation = [[0.0; 8]; 8];
        for (b, g) in frame.iter().enumerate() {
            let (_, cs) = expand_general(g, basis);
            for a in 0..8 {
                rotation[a][b] = cs[a].re;
            }
        }
        Ok(Self {
            distributions: out.try_into().expect("eight generators"),
            rotation,
        })
    }

    /// One phase point in the spin-quadrupolar basis.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 8] {
        let mu: [f64; 8] = std::array::from_fn(|b| self.distributions[b].draw(rng));
        self.rotate(&mu)
    }

    /// Exact first moments `<ψ|L_a|ψ>`.
    pub fn means(&self) -> [f64; 8] {
        self.rotate(&std::array::from_fn(|b| self.distributions[b].mean()))
    }

    /// Exact second moments `E[λ_a λ_b]` of the sampling distribution.
    pub fn second_moments(&self) -> [[f64; 8]; 8] {
        let m: [f64; 8] = std::array::from_fn(|b| self.distributions[b].mean());
        let m2: [f64; 8] = std::array::from_fn(|b| self.distributions[b].second_moment());
        let r = &self.rotation;
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let mut s = 0.0;
                for c in 0..8 {
                    for d in 0..8 {
                        let e = if c == d { m2[c] } else { m[c] * m[d] };
                        s += r[a][c] * r[b][d] * e;
                    }
                }
                s
            })
        })
    }

    fn rotate(&self, mu: &[f64; 8]) -> [f64; 8] {
        std::array::from_fn(|a| (0..8).map(|b| self.rotation[a][b] * mu[b]).sum())
    }
}

fn distribution(m: &Matrix3<C64>, psi: &Vector3<C64>, label: &'static str) -> Result<GeneratorDistribution, DtwaError> {
    let eig = SymmetricEigen::new(*m);
    let mut pairs: Vec<(f64, f64)> = (0..3)
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            (eig.eigenvalues[k], v.dotc(psi).norm_sqr())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = Vec::new();
    let mut probabilities: Vec<f64> = Vec::new();
    for (v, p) in pairs {
        match values.last() {
            Some(&last) if (v - last).abs() < DEGENERACY_TOL => *probabilities.last_mut().unwrap() += p,
            _ => {
                values.push(v);
                probabilities.push(p);
            }
        }
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOL {
        return Err(DtwaError::ProbabilitySum { generator: label, sum });
    }
    Ok(GeneratorDistribution { values, probabilities })
}
