//! Array geometries, dipolar coupling matrices and initial product states.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{fix_phase, manifold_triple, ManifoldLabel};
use crate::error::{AlgebraError, LatticeError};

fn default_spacing() -> f64 {
    1.0
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Serializable description of an array, as it appears in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub dimension: usize,
    /// `[N]` for a chain, `[Lx, Ly]` for a square lattice.
    pub extents: Vec<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Defaults to the normal of the array plane.
    #[serde(default = "default_axis")]
    pub quantization_axis: [f64; 3],
}

impl GeometrySpec {
    pub fn chain(n: usize) -> Self {
        Self {
            dimension: 1,
            extents: vec![n],
            spacing: 1.0,
            quantization_axis: default_axis(),
        }
    }

    pub fn square(lx: usize, ly: usize) -> Self {
        Self {
            dimension: 2,
            extents: vec![lx, ly],
            spacing: 1.0,
            quantization_axis: default_axis(),
        }
    }

    pub fn site_count(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn build(&self) -> Result<Geometry, LatticeError> {
        build_geometry(self.dimension, &self.extents, self.spacing, self.quantization_axis)
    }
}

/// Site positions in the `z = 0` plane, in units of length.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub dimension: usize,
    pub extents: Vec<usize>,
    pub spacing: f64,
    pub positions: Vec<[f64; 2]>,
    pub quantization_axis: [f64; 3],
}

impl Geometry {
    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// `cos θ_ij` between the bond `r_ij` and the quantization axis.
    pub fn bond_cosine(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        let r = [b[0] - a[0], b[1] - a[1], 0.0];
        let len = (r[0] * r[0] + r[1] * r[1]).sqrt();
        let e = self.quantization_axis;
        (r[0] * e[0] + r[1] * e[1] + r[2] * e[2]) / len
    }
}

/// Chain of `N` sites or an `Lx × Ly` square grid with open boundaries.
pub fn build_geometry(
    dimension: usize,
    extents: &[usize],
    spacing: f64,
    quantization_axis: [f64; 3],
) -> Result<Geometry, LatticeError> {
    if dimension != 1 && dimension != 2 {
        return Err(LatticeError::BadDimension(dimension));
    }
    if extents.len() != dimension {
        return Err(LatticeError::BadExtents(extents.to_vec(), dimension));
    }
    if extents.contains(&0) {
        return Err(LatticeError::NoSites);
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(LatticeError::BadSpacing(spacing));
    }
    let norm = quantization_axis.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(LatticeError::BadAxis);
    }
    let axis = quantization_axis.map(|c| c / norm);
    let positions = match dimension {
        1 => (0..extents[0]).map(|i| [i as f64 * spacing, 0.0]).collect(),
        _ => {
            let (lx, ly) = (extents[0], extents[1]);
            let mut p = Vec::with_capacity(lx * ly);
            for y in 0..ly {
                for x in 0..lx {
                    p.push([x as f64 * spacing, y as f64 * spacing]);
                }
            }
            p
        }
    };
    Ok(Geometry {
        dimension,
        extents: extents.to_vec(),
        spacing,
        positions,
        quantization_axis: axis,
    })
}

fn default_j1() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    #[serde(default = "default_j1")]
    pub j1: f64,
    /// `J2 / J1`.
    pub jr: f64,
    /// Power-law exponent: 0 (all-to-all) or 3 (dipolar).
    pub alpha: u32,
    #[serde(default = "default_true")]
    pub angular_factor: bool,
}

impl CouplingSpec {
    pub fn all_to_all(jr: f64) -> Self {
        Self {
            j1: 1.0,
            jr,
            alpha: 0,
            angular_factor: true,
        }
    }

    pub fn dipolar(jr: f64) -> Self {
        Self {
            j1: 1.0,
            jr,
            alpha: 3,
            angular_factor: true,
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.j1.is_finite() && self.j1 != 0.0) {
            return Err(LatticeError::ZeroCoupling);
        }
        if !self.jr.is_finite() {
            return Err(LatticeError::BadRatio(self.jr));
        }
        if self.alpha != 0 && self.alpha != 3 {
            return Err(LatticeError::BadExponent(self.alpha));
        }
        Ok(())
    }

    pub fn is_all_to_all(&self) -> bool {
        self.alpha == 0
    }
}

/// Pair couplings `J1_ij` and `J2_ij = Jr·J1_ij` (symmetric, zero diagonal).
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrices {
    pub j1: DMatrix<f64>,
    pub j2: DMatrix<f64>,
    pub jr: f64,
    /// Set when every off-diagonal `J1_ij` has this same value.
    pub uniform: Option<f64>,
}

impl CouplingMatrices {
    pub fn n_sites(&self) -> usize {
        self.j1.nrows()
    }

    /// All-to-all couplings without building a geometry.
    pub fn uniform(n: usize, j1: f64, jr: f64) -> Self {
        let j = DMatrix::from_fn(n, n, |i, k| if i == k { 0.0 } else { j1 });
        Self {
            j2: &j * jr,
            j1: j,
            jr,
            uniform: Some(j1),
        }
    }

    /// Couplings from an explicit `J1` matrix (symmetrized, diagonal cleared).
    pub fn from_j1(j1: DMatrix<f64>, jr: f64) -> Self {
        let n = j1.nrows();
        let j1 = DMatrix::from_fn(n, n, |i, k| if i == k { 0.0 } else { 0.5 * (j1[(i, k)] + j1[(k, i)]) });
        Self {
            j2: &j1 * jr,
            j1,
            jr,
            uniform: None,
        }
    }
}

pub fn coupling_matrix(geometry: &Geometry, spec: &CouplingSpec) -> Result<CouplingMatrices, LatticeError> {
    spec.validate()?;
    let n = geometry.n_sites();
    if spec.alpha == 0 {
        return Ok(CouplingMatrices::uniform(n, spec.j1, spec.jr));
    }
    let mut j1 = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in (i + 1)..n {
            let r = geometry.distance(i, k);
            let angular = if spec.angular_factor {
                let c = geometry.bond_cosine(i, k);
                1.0 - 3.0 * c * c
            } else {
                1.0
            };
            let v = spec.j1 * angular / r.powi(spec.alpha as i32);
            j1[(i, k)] = v;
            j1[(k, i)] = v;
        }
    }
    Ok(CouplingMatrices {
        j2: &j1 * spec.jr,
        jr: spec.jr,
        uniform: if n == 2 { Some(j1[(0, 1)]) } else { None },
        j1,
    })
}

/// Full Hamiltonian parameters: couplings, the collective `Ω D_xy` drive and
/// the `Ω₁`/`Ω₂` ladder drives (zero for quenches).
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub couplings: CouplingMatrices,
    pub drive_omega: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl HamiltonianSpec {
    pub fn new(couplings: CouplingMatrices, drive_omega: f64) -> Self {
        Self {
            couplings,
            drive_omega,
            omega1: 0.0,
            omega2: 0.0,
        }
    }
}

/// Named single-site states used as `|ψ>^{⊗N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateKind {
    Bx,
    Dx,
    Sax,
    Sbx,
    DxyAligned,
    /// `[[re, im]; 3]`, normalized on construction.
    Custom([[f64; 2]; 3]),
}

impl InitialStateKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitialStateKind::Bx => "bx",
            InitialStateKind::Dx => "dx",
            InitialStateKind::Sax => "sax",
            InitialStateKind::Sbx => "sbx",
            InitialStateKind::DxyAligned => "dxy_aligned",
            InitialStateKind::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub site_amplitudes: Vector3<C64>,
    pub n_sites: usize,
}

impl ProductState {
    pub fn norm(&self) -> f64 {
        self.site_amplitudes.norm()
    }
}

pub fn site_state(kind: &InitialStateKind) -> Result<Vector3<C64>, LatticeError> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| C64::new(v, 0.0);
    let amps = match kind {
        InitialStateKind::Bx => Vector3::new(r(0.5), r(h), r(0.5)),
        InitialStateKind::Dx => Vector3::new(r(0.5), r(h), r(-0.5)),
        InitialStateKind::DxyAligned => Vector3::new(r(h), r(0.0), r(h)),
        InitialStateKind::Sax => coherent_x(ManifoldLabel::A),
        InitialStateKind::Sbx => coherent_x(ManifoldLabel::B),
        InitialStateKind::Custom(c) => {
            let v = Vector3::new(
                C64::new(c[0][0], c[0][1]),
                C64::new(c[1][0], c[1][1]),
                C64::new(c[2][0], c[2][1]),
            );
            let norm = v.norm();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(LatticeError::BadAmplitudes);
            }
            v / C64::new(norm, 0.0)
        }
    };
    Ok(amps)
}

fn coherent_x(label: ManifoldLabel) -> Vector3<C64> {
    let triple = manifold_triple(label).unwrap_or_else(|e: AlgebraError| panic!("built-in triple: {e}"));
    fix_phase(triple.x_coherent_state())
}

pub fn initial_state(kind: &InitialStateKind, n_sites: usize) -> Result<ProductState, LatticeError> {
    if n_sites == 0 {
        return Err(LatticeError::NoSites);
    }
    Ok(ProductState {
        site_amplitudes: site_state(kind)?,
        n_sites,
    })
}
