//! Mean-field equations of motion in the generator basis.
//!
//! The pair interaction `Σ_{i≠j} [J1_ij Λ²¹_i Λ¹²_j + J2_ij Λ³²_i Λ²³_j]` is
//! written as `Σ_{i<j} J1_ij λ_i·K·λ_j` with `J2 = Jr·J1` and
//! `K = k¹ + Jr k²`, where `k¹`, `k²` are the generator-basis coefficients of
//! `Λ²¹⊗Λ¹² + Λ¹²⊗Λ²¹` and `Λ³²⊗Λ²³ + Λ²³⊗Λ³²`. Every site then precesses
//! in its effective field `h_i = K Σ_j J1_ij λ_j + drive`:
//!
//! `dλ_i^a/dt = Σ_{bc} f_abc h_i^b λ_i^c`.

use nalgebra::DMatrix;

use crate::algebra::{
    expand_in_basis, kron, lambda, structure_constants, two_body_coefficients, OperatorBasis, StructureTensor,
};
use crate::error::DtwaError;
use crate::exact::drive_operator;
use crate::lattice::HamiltonianSpec;

/// Number of generators per site.
pub const DIM: usize = 8;

#[derive(Clone, Debug, PartialEq)]
enum Coupling {
    Uniform(f64),
    Dense(DMatrix<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldModel {
    n: usize,
    coupling: Coupling,
    k: [[f64; DIM]; DIM],
    drive: [f64; DIM],
    drive_identity: f64,
    /// Nonzero `f_abc` as `(a, b, c, f)`.
    f: Vec<(usize, usize, usize, f64)>,
}

/// Generator-basis coefficients of the symmetric pair term for levels
/// `(α, β)`: `Λ^{βα}⊗Λ^{αβ} + Λ^{αβ}⊗Λ^{βα}`.
pub fn pair_coefficients(alpha: usize, beta: usize, basis: &OperatorBasis) -> [[f64; DIM]; DIM] {
    let up = lambda(beta, alpha);
    let down = lambda(alpha, beta);
    let p = kron(&up, &down) + kron(&down, &up);
    two_body_coefficients(&p, basis).0
}

impl MeanFieldModel {
    pub fn new(spec: &HamiltonianSpec, basis: &OperatorBasis) -> Result<Self, DtwaError> {
        let c = &spec.couplings;
        let n = c.n_sites();
        let k1 = pair_coefficients(1, 2, basis);
        let k2 = pair_coefficients(2, 3, basis);
        let k = std::array::from_fn(|a| std::array::from_fn(|b| k1[a][b] + c.jr * k2[a][b]));
        let drive = expand_in_basis(&drive_operator(spec.drive_omega, spec.omega1, spec.omega2), basis)?;
        let tensor: StructureTensor = structure_constants(basis)?;
        let coupling = match c.uniform {
            Some(j) => Coupling::Uniform(j),
            None => Coupling::Dense(c.j1.clone()),
        };
        Ok(Self {
            n,
            coupling,
            k,
            drive: drive.generators,
            drive_identity: drive.identity,
            f: tensor.nonzeros(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn coupling_tensor(&self) -> &[[f64; DIM]; DIM] {
        &self.k
    }

    /// `Σ_j J1_ij λ_j` for every column block of `y` (`N × 8B`, column
    /// `8b + a` holding generator `a` of trajectory `b`).
    fn neighbor_sums(&self, y: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        match &self.coupling {
            Coupling::Uniform(j) => {
                for (col_in, mut col_out) in y.column_iter().zip(out.column_iter_mut()) {
                    let total: f64 = col_in.iter().sum();
                    for (o, v) in col_out.iter_mut().zip(col_in.iter()) {
                        *o = j * (total - v);
                    }
                }
            }
            Coupling::Dense(j) => out.gemm(1.0, j, y, 0.0),
        }
    }

    fn field(&self, m: &[f64; DIM]) -> [f64; DIM] {
        std::array::from_fn(|c| self.drive[c] + (0..DIM).map(|d| self.k[c][d] * m[d]).sum::<f64>())
    }

    /// Time derivative of a batch; `scratch` has the shape of `y`.
    pub fn rhs(&self, y: &DMatrix<f64>, dy: &mut DMatrix<f64>, scratch: &mut DMatrix<f64>) {
        self.neighbor_sums(y, scratch);
        let n = self.n;
        let batch = y.ncols() / DIM;
        let (ys, ms, ds) = (y.as_slice(), scratch.as_slice(), dy.as_mut_slice());
        for b in 0..batch {
            let base = b * DIM * n;
            for i in 0..n {
                let lam: [f64; DIM] = std::array::from_fn(|a| ys[base + a * n + i]);
                let m: [f64; DIM] = std::array::from_fn(|a| ms[base + a * n + i]);
                let h = self.field(&m);
                let mut d = [0.0; DIM];
                for &(a, bb, c, f) in &self.f {
                    d[a] += f * h[bb] * lam[c];
                }
                for a in 0..DIM {
                    ds[base + a * n + i] = d[a];
                }
            }
        }
    }

    /// Classical energy `Σ_{i<j} J1_ij λ_i·K·λ_j + Σ_i <drive>_i` per trajectory.
    pub fn energies(&self, y: &DMatrix<f64>, scratch: &mut DMatrix<f64>) -> Vec<f64> {
        self.neighbor_sums(y, scratch);
        let n = self.n;
        let batch = y.ncols() / DIM;
        let (ys, ms) = (y.as_slice(), scratch.as_slice());
        (0..batch)
            .map(|b| {
                let base = b * DIM * n;
                let mut e = n as f64 * self.drive_identity;
                for i in 0..n {
                    let lam: [f64; DIM] = std::array::from_fn(|a| ys[base + a * n + i]);
                    let m: [f64; DIM] = std::array::from_fn(|a| ms[base + a * n + i]);
                    for a in 0..DIM {
                        let km: f64 = (0..DIM).map(|d| self.k[a][d] * m[d]).sum();
                        e += lam[a] * (0.5 * km + self.drive[a]);
                    }
                }
                e
            })
            .collect()
    }
}

/// Per-site `Σ_a (λ_i^a)²` of trajectory `b`, conserved by the flow.
pub fn casimirs(y: &DMatrix<f64>, b: usize) -> Vec<f64> {
    let n = y.nrows();
    let s = y.as_slice();
    let base = b * DIM * n;
    (0..n)
        .map(|i| (0..DIM).map(|a| s[base + a * n + i].powi(2)).sum())
        .collect()
}

/// Packs per-trajectory site vectors into the `N × 8B` batch layout.
pub fn pack(trajectories: &[Vec<[f64; DIM]>]) -> DMatrix<f64> {
    let n = trajectories.first().map_or(0, |t| t.len());
    let mut y = DMatrix::zeros(n, DIM * trajectories.len());
    for (b, t) in trajectories.iter().enumerate() {
        for (i, lam) in t.iter().enumerate() {
            for a in 0..DIM {
                y[(i, b * DIM + a)] = lam[a];
            }
        }
    }
    y
}

/// Site `i` of trajectory `b`.
pub fn site(y: &DMatrix<f64>, b: usize, i: usize) -> [f64; DIM] {
    std::array::from_fn(|a| y[(i, b * DIM + a)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{exchange_form, spin_quadrupolar_basis};
    use crate::lattice::CouplingMatrices;

    #[test]
    fn coupling_tensor_reassembles_the_pair_operator() {
        let basis = spin_quadrupolar_basis();
        for jr in [1.0, -1.0, 0.5] {
            let spec = HamiltonianSpec::new(CouplingMatrices::uniform(2, 1.0, jr), 0.0);
            let model = MeanFieldModel::new(&spec, &basis).unwrap();
            let mut rebuilt = DMatrix::zeros(9, 9);
            for a in 0..DIM {
                for b in 0..DIM {
                    let op = kron(&basis.generators[a], &basis.generators[b]);
                    rebuilt += op * num_complex::Complex64::new(model.k[a][b], 0.0);
                }
            }
            assert!((rebuilt - exchange_form(1.0, jr)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_couplings_and_drive_give_zero_derivative() {
        let basis = spin_quadrupolar_basis();
        let spec = HamiltonianSpec::new(CouplingMatrices::from_j1(DMatrix::zeros(3, 3), 1.0), 0.0);
        let model = MeanFieldModel::new(&spec, &basis).unwrap();
        let y = DMatrix::from_fn(3, 16, |i, c| (i as f64 + 1.0) * 0.1 - c as f64 * 0.03);
        let mut dy = DMatrix::zeros(3, 16);
        let mut scratch = DMatrix::zeros(3, 16);
        model.rhs(&y, &mut dy, &mut scratch);
        assert!(dy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_and_dense_paths_agree() {
        let basis = spin_quadrupolar_basis();
        let n = 5;
        let uni = HamiltonianSpec::new(CouplingMatrices::uniform(n, 0.7, -1.0), 0.4);
        let dense = HamiltonianSpec::new(
            CouplingMatrices::from_j1(DMatrix::from_fn(n, n, |_, _| 0.7), -1.0),
            0.4,
        );
        let a = MeanFieldModel::new(&uni, &basis).unwrap();
        let b = MeanFieldModel::new(&dense, &basis).unwrap();
        let y = DMatrix::from_fn(n, 16, |i, c| ((i * 7 + c * 3) % 11) as f64 * 0.1 - 0.5);
        let (mut da, mut db, mut s) = (DMatrix::zeros(n, 16), DMatrix::zeros(n, 16), DMatrix::zeros(n, 16));
        a.rhs(&y, &mut da, &mut s);
        b.rhs(&y, &mut db, &mut s);
        assert!((da - db).norm() < 1e-12);
        let ea = a.energies(&y, &mut s);
        let eb = b.energies(&y, &mut s);
        for (x, z) in ea.iter().zip(&eb) {
            assert!((x - z).abs() < 1e-12);
        }
    }
}
