//! Exact quantum evolution in the permutation-symmetric sector (all-to-all
//! couplings, large N) and in the full `3^N` space (any couplings, small N).

pub mod basis;
pub mod closed_form;
pub mod hamiltonian;
pub mod krylov;
pub mod sparse;

use num_complex::Complex64 as C64;

pub use basis::{FullBasis, SymmetricBasis};
pub use closed_form::ClosedFormPropagator;
pub use hamiltonian::{collective_hamiltonian, drive_operator, full_hamiltonian};
pub use krylov::{evolve, evolve_with, KrylovConfig};
pub use sparse::SparseOperator;

use crate::algebra::{ManifoldTriple, OperatorMatrix};
use crate::error::ExactError;
use crate::lattice::{HamiltonianSpec, ProductState};
use crate::metrology::SpinMoments;

/// Default cap on `N` for the full `3^N` representation.
pub const DEFAULT_FULL_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Symmetric { n: usize },
    Full { n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amps: Vec<C64>,
    pub repr: Representation,
}

impl StateVector {
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Basis choice for an exact run.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactBasis {
    Symmetric(SymmetricBasis),
    Full(FullBasis),
}

impl ExactBasis {
    pub fn symmetric(n: usize) -> Result<Self, ExactError> {
        Ok(Self::Symmetric(SymmetricBasis::new(n)?))
    }

    pub fn full(n: usize, cap: usize) -> Result<Self, ExactError> {
        Ok(Self::Full(FullBasis::new(n, cap)?))
    }

    pub fn representation(&self) -> Representation {
        match self {
            ExactBasis::Symmetric(b) => Representation::Symmetric { n: b.n_atoms() },
            ExactBasis::Full(b) => Representation::Full { n: b.n_atoms() },
        }
    }

    pub fn n_atoms(&self) -> usize {
        match self {
            ExactBasis::Symmetric(b) => b.n_atoms(),
            ExactBasis::Full(b) => b.n_atoms(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ExactBasis::Symmetric(b) => b.dim(),
            ExactBasis::Full(b) => b.dim(),
        }
    }

    pub fn product_state(&self, state: &ProductState) -> Result<StateVector, ExactError> {
        if state.n_sites != self.n_atoms() {
            return Err(ExactError::RepresentationMismatch(format!(
                "state has {} sites, basis {}",
                state.n_sites,
                self.n_atoms()
            )));
        }
        let c = [state.site_amplitudes[0], state.site_amplitudes[1], state.site_amplitudes[2]];
        let amps = match self {
            ExactBasis::Symmetric(b) => b.product_state(&c),
            ExactBasis::Full(b) => b.product_state(&c),
        };
        Ok(StateVector {
            amps,
            repr: self.representation(),
        })
    }

    /// `Σ_i o_i` in this representation.
    pub fn collective_operator(&self, single_site: &OperatorMatrix) -> SparseOperator {
        match self {
            ExactBasis::Symmetric(b) => b.collective_operator(single_site),
            ExactBasis::Full(b) => b.collective_operator(single_site),
        }
    }

    /// Hamiltonian for this representation. The symmetric sector requires
    /// uniform couplings.
    pub fn hamiltonian(&self, spec: &HamiltonianSpec) -> Result<SparseOperator, ExactError> {
        match self {
            ExactBasis::Symmetric(b) => {
                let j1 = spec.couplings.uniform.ok_or_else(|| {
                    ExactError::RepresentationMismatch("symmetric sector requires all-to-all couplings".into())
                })?;
                collective_hamiltonian(b, j1, spec.couplings.jr, spec.drive_omega, (spec.omega1, spec.omega2))
            }
            ExactBasis::Full(b) => full_hamiltonian(spec, b.n_atoms()),
        }
    }
}

/// Scratch buffers for [`CollectiveTriple::moments_with`].
#[derive(Clone, Debug, Default)]
pub struct MomentWorkspace {
    images: [Vec<C64>; 3],
}

/// Collective `(X, Y, Z)` sums of one manifold, ready for moment evaluation.
pub struct CollectiveTriple {
    pub ops: [SparseOperator; 3],
    pub repr: Representation,
}

impl CollectiveTriple {
    pub fn new(basis: &ExactBasis, triple: &ManifoldTriple) -> Self {
        Self {
            ops: triple.ops().map(|o| basis.collective_operator(&o)),
            repr: basis.representation(),
        }
    }

    /// Means and symmetrized covariances, `cov_kl = Re<A_k ψ|A_l ψ> - <A_k><A_l>`.
    pub fn moments(&self, psi: &StateVector) -> Result<SpinMoments, ExactError> {
        self.moments_with(psi, &mut MomentWorkspace::default())
    }

    /// As [`Self::moments`], reusing `work` for the operator images.
    pub fn moments_with(&self, psi: &StateVector, work: &mut MomentWorkspace) -> Result<SpinMoments, ExactError> {
        if psi.repr != self.repr {
            return Err(ExactError::RepresentationMismatch(format!(
                "{:?} vs {:?}",
                psi.repr, self.repr
            )));
        }
        let images = &mut work.images;
        for (img, op) in images.iter_mut().zip(&self.ops) {
            img.resize(psi.amps.len(), C64::new(0.0, 0.0));
            op.matvec_into(&psi.amps, img);
        }
        let dot = |a: &[C64], b: &[C64]| -> f64 { a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum() };
        let mean: [f64; 3] = std::array::from_fn(|k| dot(&psi.amps, &images[k]));
        let cov: [[f64; 3]; 3] = std::array::from_fn(|k| {
            std::array::from_fn(|l| dot(&images[k], &images[l]) - mean[k] * mean[l])
        });
        let n = match self.repr {
            Representation::Symmetric { n } | Representation::Full { n } => n,
        };
        Ok(SpinMoments {
            mean,
            cov,
            n_atoms: n,
            stderr: None,
        })
    }
}
