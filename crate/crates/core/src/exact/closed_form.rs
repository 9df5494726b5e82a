//! Closed-form evolution of product states in the symmetric sector.
//!
//! Without the legacy `Ω₁, Ω₂` drives the symmetric-sector Hamiltonian
//! `J1 N₂(N₁ + Jr N₃) + Ω(a₁†a₃ + a₃†a₁)` conserves `n₂` and, for fixed `n₂`,
//! is the single-particle Hamiltonian
//!
//! `h(n₂) = [[J1 n₂, Ω], [Ω, J1 Jr n₂]]`
//!
//! acting on modes 1 and 3. A product state `(c₁, c₂, c₃)^{⊗N}` therefore
//! evolves into
//!
//! `ψ(n₁, n₂, n₃; t) = sqrt(N!/(n₁! n₂! n₃!)) c₂^{n₂} v₁^{n₁} v₃^{n₃}`,
//! `v = exp(-i h(n₂) t) (c₁, c₃)`,
//!
//! which costs one pass over the basis per time point, independent of `‖H‖t`.

use num_complex::Complex64 as C64;

use crate::error::ExactError;
use crate::exact::basis::{log_factorials, SymmetricBasis};
use crate::exact::{Representation, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormPropagator {
    basis: SymmetricBasis,
    j1: f64,
    jr: f64,
    omega: f64,
    c: [C64; 3],
    log_fact: Vec<f64>,
    sqrt_table: Vec<f64>,
}

/// `exp(-i h t)` for real symmetric `h = [[a, b], [b, d]]`.
fn expm_2x2(a: f64, b: f64, d: f64, t: f64) -> [[C64; 2]; 2] {
    let mid = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b * b).sqrt();
    let phase = C64::from_polar(1.0, -mid * t);
    let (cos, sinc) = if r * t.abs() < 1e-8 {
        // sin(rt)/r → t
        (1.0 - 0.5 * (r * t).powi(2), t * (1.0 - (r * t).powi(2) / 6.0))
    } else {
        ((r * t).cos(), (r * t).sin() / r)
    };
    let mi = C64::new(0.0, -1.0);
    [
        [phase * (cos + mi * half * sinc), phase * (mi * b * sinc)],
        [phase * (mi * b * sinc), phase * (cos - mi * half * sinc)],
    ]
}

impl ClosedFormPropagator {
    pub fn new(basis: SymmetricBasis, j1: f64, jr: f64, omega: f64, site: [C64; 3]) -> Result<Self, ExactError> {
        if !(j1.is_finite() && jr.is_finite() && omega.is_finite()) || site.iter().any(|z| !z.is_finite()) {
            return Err(ExactError::NonFinite);
        }
        let log_fact = log_factorials(basis.n_atoms());
        let sqrt_table = (0..=basis.n_atoms()).map(|k| (k as f64).sqrt()).collect();
        Ok(Self {
            basis,
            j1,
            jr,
            omega,
            c: site,
            log_fact,
            sqrt_table,
        })
    }

    pub fn basis(&self) -> &SymmetricBasis {
        &self.basis
    }

    /// Writes `ψ(t)` into `out` (length = basis dimension).
    ///
    /// Each fixed-`n₂` row is a binomial in `(v₁, v₃)`: its largest element
    /// is evaluated in log space and the rest follow from the ratio
    /// `ψ(n₁+1)/ψ(n₁) = sqrt(n₃/(n₁+1)) v₁/v₃`, which avoids underflow at
    /// the start of the row.
    pub fn state_into(&self, t: f64, out: &mut [C64]) {
        let n = self.basis.n_atoms();
        let lf = &self.log_fact;
        let sq = &self.sqrt_table;
        let [c1, c2, c3] = self.c;
        let zero = C64::new(0.0, 0.0);
        let (l2, a2) = polar(c2);
        for n2 in 0..=n {
            let m = n - n2;
            let at = |n1: usize| self.basis.index([n1 as u32, n2 as u32, (m - n1) as u32]).expect("in basis");
            if n2 > 0 && l2 == f64::NEG_INFINITY {
                for n1 in 0..=m {
                    out[at(n1)] = zero;
                }
                continue;
            }
            let x = n2 as f64 * self.j1;
            let u = expm_2x2(x, self.omega, self.jr * x, t);
            let v1 = u[0][0] * c1 + u[0][1] * c3;
            let v3 = u[1][0] * c1 + u[1][1] * c3;
            let (p1, p3) = (v1.norm_sqr(), v3.norm_sqr());
            let peak = if p1 + p3 == 0.0 {
                0
            } else {
                ((m as f64 * p1 / (p1 + p3)).round() as usize).min(m)
            };
            let (lv1, av1) = polar(v1);
            let (lv3, av3) = polar(v3);
            let (k1, k3) = (peak, m - peak);
            let mut log_mag = 0.5 * (lf[n] - lf[peak] - lf[n2] - lf[k3]);
            let mut phase = 0.0;
            for (k, (l, a)) in [(k1, (lv1, av1)), (n2, (l2, a2)), (k3, (lv3, av3))] {
                if k > 0 {
                    log_mag += k as f64 * l;
                    phase += k as f64 * a;
                }
            }
            let top = if log_mag == f64::NEG_INFINITY || log_mag.is_nan() {
                zero
            } else {
                C64::from_polar(log_mag.exp(), phase)
            };
            out[at(peak)] = top;
            let mut amp = top;
            if peak < m {
                let ratio = if lv3 == f64::NEG_INFINITY { zero } else { v1 / v3 };
                for k in peak..m {
                    amp *= ratio * (sq[m - k] / sq[k + 1]);
                    out[at(k + 1)] = amp;
                }
            }
            amp = top;
            if peak > 0 {
                let ratio = if lv1 == f64::NEG_INFINITY { zero } else { v3 / v1 };
                for k in (1..=peak).rev() {
                    amp *= ratio * (sq[k] / sq[m - k + 1]);
                    out[at(k - 1)] = amp;
                }
            }
        }
    }

    pub fn state(&self, t: f64) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); self.basis.dim()];
        self.state_into(t, &mut amps);
        StateVector {
            amps,
            repr: Representation::Symmetric { n: self.basis.n_atoms() },
        }
    }

    /// Streams `ψ(t)` for each grid time, mirroring [`crate::exact::evolve_with`].
    pub fn evolve_with<F>(&self, times: &[f64], mut observer: F) -> Result<(), ExactError>
    where
        F: FnMut(usize, &StateVector) -> Result<(), ExactError>,
    {
        if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(ExactError::BadTimeGrid);
        }
        let mut psi = StateVector {
            amps: vec![C64::new(0.0, 0.0); self.basis.dim()],
            repr: Representation::Symmetric { n: self.basis.n_atoms() },
        };
        for (k, &t) in times.iter().enumerate() {
            self.state_into(t, &mut psi.amps);
            observer(k, &psi)?;
        }
        Ok(())
    }
}

fn polar(z: C64) -> (f64, f64) {
    let r = z.norm();
    if r == 0.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        (r.ln(), z.arg())
    }
}
