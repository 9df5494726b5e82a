//! Single-site SU(3) operator algebra for a spin-1 (three-level) atom.
//!
//! Levels are ordered `|1>, |2>, |3>` and identified with the spin-1 magnetic
//! sublevels `m = +1, 0, -1`. With this choice `D_xy = |1><3| + |3><1|`, so the
//! collective drive couples `|1> <-> |3>` directly.
//!
//! The eight generators `S_x, S_y, S_z, Q_xz, Q_yz, Q_xy, D_xy, Y` are Hermitian,
//! traceless and Hilbert–Schmidt orthogonal with `tr(L_a L_b) = 2 δ_ab`. The sign
//! of `Y` is fixed so that `D_xy + √3 Y = 2(|B><B| - |2><2|)`, which makes the
//! bright-manifold z generator act on `span{|B>, |2>}`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64 as C64;

use crate::error::AlgebraError;

/// Absolute tolerance for matrix identities.
pub const TOL: f64 = 1e-12;

/// Hilbert–Schmidt norm shared by every generator: `tr(L_a L_a)`.
pub const GENERATOR_NORM: f64 = 2.0;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A 3×3 complex matrix acting on one site (ħ = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorMatrix(pub Matrix3<C64>);

impl OperatorMatrix {
    pub fn zeros() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn from_real(rows: [[f64; 3]; 3]) -> Self {
        Self(Matrix3::from_fn(|r, c| C64::new(rows[r][c], 0.0)))
    }

    pub fn from_rows(rows: [[C64; 3]; 3]) -> Self {
        Self(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &Vector3<C64>, v: &Vector3<C64>) -> Self {
        Self(u * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `M - M†`.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(self.0 * other.0 - other.0 * self.0)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self(self.0 * other.0 + other.0 * self.0)
    }

    /// Hilbert–Schmidt inner product `tr(A† B)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0 * C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(self.0 * s)
    }

    pub fn apply(&self, psi: &Vector3<C64>) -> Vector3<C64> {
        self.0 * psi
    }

    /// `<psi|M|psi>` (real part; exact for Hermitian `M`).
    pub fn expectation(&self, psi: &Vector3<C64>) -> f64 {
        psi.dotc(&(self.0 * psi)).re
    }

    /// Promote to a dynamically sized matrix (for tensor products).
    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(3, 3, |r, c| self.0[(r, c)])
    }
}

impl Add for OperatorMatrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for OperatorMatrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for OperatorMatrix {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul for OperatorMatrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Mul<f64> for OperatorMatrix {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl fmt::Display for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..3 {
            let row: Vec<String> = (0..3)
                .map(|c| {
                    let z = self.0[(r, c)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `|alpha><beta|` with 1-based level labels.
pub fn transition_operator(alpha: usize, beta: usize) -> Result<OperatorMatrix, AlgebraError> {
    for level in [alpha, beta] {
        if !(1..=3).contains(&level) {
            return Err(AlgebraError::LevelOutOfRange(level));
        }
    }
    let mut m = Matrix3::zeros();
    m[(alpha - 1, beta - 1)] = ONE;
    Ok(OperatorMatrix(m))
}

/// Infallible variant for internal use with literal indices.
pub(crate) fn lambda(alpha: usize, beta: usize) -> OperatorMatrix {
    transition_operator(alpha, beta).expect("literal level indices")
}

/// Standard spin-1 matrices `(S_x, S_y, S_z)` in the `m = +1, 0, -1` basis.
pub fn spin_one_matrices() -> [OperatorMatrix; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sx = OperatorMatrix::from_real([[0.0, s, 0.0], [s, 0.0, s], [0.0, s, 0.0]]);
    let is = C64::new(0.0, s);
    let sy = OperatorMatrix::from_rows([[ZERO, -is, ZERO], [is, ZERO, -is], [ZERO, is, ZERO]]);
    let sz = OperatorMatrix::from_real([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]]);
    [sx, sy, sz]
}

/// Labels of the spin-quadrupolar generators, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    Sx,
    Sy,
    Sz,
    Qxz,
    Qyz,
    Qxy,
    Dxy,
    Y,
}

impl Generator {
    pub const ALL: [Generator; 8] = [
        Generator::Sx,
        Generator::Sy,
        Generator::Sz,
        Generator::Qxz,
        Generator::Qyz,
        Generator::Qxy,
        Generator::Dxy,
        Generator::Y,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Generator::Sx => "S_x",
            Generator::Sy => "S_y",
            Generator::Sz => "S_z",
            Generator::Qxz => "Q_xz",
            Generator::Qyz => "Q_yz",
            Generator::Qxy => "Q_xy",
            Generator::Dxy => "D_xy",
            Generator::Y => "Y",
        }
    }
}

/// Identity plus the eight spin-quadrupolar generators.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorBasis {
    pub identity: OperatorMatrix,
    pub generators: [OperatorMatrix; 8],
}

impl OperatorBasis {
    pub fn get(&self, g: Generator) -> &OperatorMatrix {
        &self.generators[g.index()]
    }

    /// Largest deviation of the Gram matrix from `GENERATOR_NORM · δ_ab`.
    pub fn gram_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, la) in self.generators.iter().enumerate() {
            for (b, lb) in self.generators.iter().enumerate() {
                let target = if a == b { GENERATOR_NORM } else { 0.0 };
                worst = worst.max((la.hs_inner(lb) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Writes every matrix numerically, one block per operator.
    pub fn reference_listing(&self) -> String {
        let mut out = String::from("identity\n");
        out.push_str(&self.identity.to_string());
        for g in Generator::ALL {
            out.push_str(&format!("\n{}\n", g.label()));
            out.push_str(&self.get(g).to_string());
        }
        out
    }
}

/// The spin-quadrupolar basis `{S_x, S_y, S_z, Q_xz, Q_yz, Q_xy, D_xy, Y}`.
///
/// `Q_μν = S_μ S_ν + S_ν S_μ`, `D_xy = S_x² - S_y²` and
/// `Y = -(S_x² + S_y² - 2 S_z²)/√3 = diag(1, -2, 1)/√3`.
pub fn spin_quadrupolar_basis() -> OperatorBasis {
    let [sx, sy, sz] = spin_one_matrices();
    let qxz = sx.anticommutator(&sz);
    let qyz = sy.anticommutator(&sz);
    let qxy = sx.anticommutator(&sy);
    let dxy = sx * sx - sy * sy;
    let y = (sx * sx + sy * sy - sz * sz * 2.0) * (-1.0 / 3f64.sqrt());
    OperatorBasis {
        identity: OperatorMatrix::identity(),
        generators: [sx, sy, sz, qxz, qyz, qxy, dxy, y],
    }
}

/// Real structure constants `f_abc` with `[L_a, L_b] = i Σ_c f_abc L_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTensor {
    f: [[[f64; 8]; 8]; 8],
}

impl StructureTensor {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.f[a][b][c]
    }

    /// Nonzero entries as `(a, b, c, f_abc)`, in index order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    let v = self.f[a][b][c];
                    if v.abs() > TOL {
                        out.push((a, b, c, v));
                    }
                }
            }
        }
        out
    }

    /// Largest `|f_abc - f_{σ(abc)}·sign(σ)|` over all index permutations.
    pub fn total_antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..8 {
            for b in 0..8 {
                for c in 0..8 {
                    let v = self.f[a][b][c];
                    worst = worst
                        .max((v + self.f[b][a][c]).abs())
                        .max((v - self.f[b][c][a]).abs())
                        .max((v + self.f[a][c][b]).abs());
                }
            }
        }
        worst
    }
}

/// Projects every commutator of `basis` back onto the generators.
pub fn structure_constants(basis: &OperatorBasis) -> Result<StructureTensor, AlgebraError> {
    let gram = basis.gram_residual();
    if gram > 1e-10 {
        return Err(AlgebraError::NonOrthogonalBasis(gram));
    }
    let gens = &basis.generators;
    let mut f = [[[0.0; 8]; 8]; 8];
    let mut worst: f64 = 0.0;
    for a in 0..8 {
        for b in 0..8 {
            let comm = gens[a].commutator(&gens[b]);
            // [L_a, L_b]/i is Hermitian; its coefficients are real.
            let herm = comm.scale_complex(-I);
            let mut rebuilt = OperatorMatrix::zeros();
            for c in 0..8 {
                let coef = gens[c].hs_inner(&herm).re / GENERATOR_NORM;
                f[a][b][c] = coef;
                rebuilt = rebuilt + gens[c].scale_complex(I * coef);
            }
            worst = worst.max((rebuilt - comm).frobenius_norm());
        }
    }
    if worst > TOL {
        return Err(AlgebraError::ReexpansionResidual(worst));
    }
    Ok(StructureTensor { f })
}

/// Coefficients of `M = c0·I + Σ_a c_a L_a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expansion {
    pub identity: f64,
    pub generators: [f64; 8],
}

impl Expansion {
    pub fn reconstruct(&self, basis: &OperatorBasis) -> OperatorMatrix {
        basis
            .generators
            .iter()
            .zip(self.generators.iter())
            .fold(basis.identity * self.identity, |acc, (g, &c)| acc + *g * c)
    }

    /// Value of the expanded operator on a classical phase point.
    pub fn evaluate(&self, lambdas: &[f64]) -> f64 {
        self.identity
            + self
                .generators
                .iter()
                .zip(lambdas)
                .map(|(c, l)| c * l)
                .sum::<f64>()
    }
}

pub fn expand_in_basis(m: &OperatorMatrix, basis: &OperatorBasis) -> Result<Expansion, AlgebraError> {
    let residual = m.hermiticity_residual();
    if residual > 1e-10 {
        return Err(AlgebraError::NotHermitian(residual));
    }
    let (c0, cs) = expand_general(m, basis);
    Ok(Expansion {
        identity: c0.re,
        generators: cs.map(|c| c.re),
    })
}

/// Complex coefficients of an arbitrary (possibly non-Hermitian) operator.
pub fn expand_general(m: &OperatorMatrix, basis: &OperatorBasis) -> (C64, [C64; 8]) {
    let c0 = m.trace() / 3.0;
    let mut cs = [ZERO; 8];
    for (c, g) in cs.iter_mut().zip(basis.generators.iter()) {
        *c = g.hs_inner(m) / GENERATOR_NORM;
    }
    (c0, cs)
}

/// Which effective SU(2) subalgebra a triple spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldLabel {
    Bright,
    Dark,
    A,
    B,
}

impl ManifoldLabel {
    pub fn name(self) -> &'static str {
        match self {
            ManifoldLabel::Bright => "bright",
            ManifoldLabel::Dark => "dark",
            ManifoldLabel::A => "A",
            ManifoldLabel::B => "B",
        }
    }
}

/// A canonically normalized `(X, Y, Z)` triple with `[X, Y] = iZ` and cyclic.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldTriple {
    pub label: ManifoldLabel,
    pub x_op: OperatorMatrix,
    pub y_op: OperatorMatrix,
    pub z_op: OperatorMatrix,
    /// Per-axis factors applied to the printed `(X, Y, Z)` combinations.
    pub normalization: [f64; 3],
    /// Projector onto the subspace where the triple acts nontrivially.
    pub active_subspace: OperatorMatrix,
    pub active_rank: usize,
    /// Spin quantum number of the representation on the active subspace.
    pub spin: f64,
}

impl ManifoldTriple {
    pub fn ops(&self) -> [OperatorMatrix; 3] {
        [self.x_op, self.y_op, self.z_op]
    }

    /// `X + iY`.
    pub fn raising(&self) -> OperatorMatrix {
        self.x_op + self.y_op.scale_complex(I)
    }

    pub fn lowering(&self) -> OperatorMatrix {
        self.x_op - self.y_op.scale_complex(I)
    }

    /// Largest residual of the three cyclic commutation relations.
    pub fn closure_residual(&self) -> f64 {
        let [x, y, z] = self.ops();
        let p = self.active_subspace;
        let r1 = p * (x.commutator(&y) - z.scale_complex(I)) * p;
        let r2 = p * (y.commutator(&z) - x.scale_complex(I)) * p;
        let r3 = p * (z.commutator(&x) - y.scale_complex(I)) * p;
        r1.frobenius_norm()
            .max(r2.frobenius_norm())
            .max(r3.frobenius_norm())
    }

    /// Top eigenvector of the normalized `X` inside the active subspace, with
    /// the first non-negligible component made real and positive.
    pub fn x_coherent_state(&self) -> Vector3<C64> {
        let eig = self.x_op.0.symmetric_eigen();
        let (k, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 + 1e-12 {
                    (i, v)
                } else {
                    best
                }
            });
        fix_phase(eig.eigenvectors.column(k).into_owned())
    }
}

/// Normalize and rotate the global phase so the first component with
/// modulus above 1e-9 is real positive.
pub fn fix_phase(mut v: Vector3<C64>) -> Vector3<C64> {
    let norm = v.norm();
    v /= C64::new(norm, 0.0);
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-9).copied() {
        let phase = lead.conj() / lead.norm();
        v *= phase;
    }
    v
}

/// The triple exactly as printed: `(1/2){X, Y, Z}` combinations of generators.
pub fn printed_triple(label: ManifoldLabel, basis: &OperatorBasis) -> [OperatorMatrix; 3] {
    use Generator::*;
    let g = |x| *basis.get(x);
    let r3 = 3f64.sqrt();
    let raw = match label {
        ManifoldLabel::Bright => [g(Sx), g(Qyz), g(Dxy) + g(Y) * r3],
        ManifoldLabel::Dark => [g(Qxz), g(Sy), g(Dxy) - g(Y) * r3],
        ManifoldLabel::A => [
            g(Sx) - g(Sy) + g(Qxz) - g(Qyz),
            g(Sx) - g(Sy) - (g(Qxz) - g(Qyz)),
            g(Dxy),
        ],
        ManifoldLabel::B => [
            g(Sx) + g(Sy) - (g(Qxz) + g(Qyz)),
            g(Sx) + g(Sy) + (g(Qxz) + g(Qyz)),
            g(Dxy),
        ],
    };
    raw.map(|m| m * 0.5)
}

/// `κ` with `[P, Q] = iκ R`, or an error if the commutator leaves span{R}.
fn closure_coefficient(
    p: &OperatorMatrix,
    q: &OperatorMatrix,
    r: &OperatorMatrix,
    label: ManifoldLabel,
) -> Result<f64, AlgebraError> {
    let comm = p.commutator(q).scale_complex(-I);
    let kappa = r.hs_inner(&comm).re / r.hs_inner(r).re;
    let residual = (comm - *r * kappa).frobenius_norm();
    if residual > 1e-10 || kappa.abs() < 1e-10 {
        return Err(AlgebraError::ClosureFailed {
            label: label.name(),
            reason: format!("commutator leaves the triple (residual {residual:.3e})"),
        });
    }
    Ok(kappa)
}

/// Builds the normalized triple for `label`.
///
/// Writing `[X, Y] = iκ₁Z`, `[Y, Z] = iκ₂X`, `[Z, X] = iκ₃Y` for the printed
/// operators, the per-axis factors `(a, b, c)` solve `abκ₁ = c`, `bcκ₂ = a`,
/// `caκ₃ = b`, giving `a² = 1/(κ₁κ₃)`, `b² = 1/(κ₁κ₂)`, `c = abκ₁` with `a, b > 0`.
pub fn manifold_triple(label: ManifoldLabel) -> Result<ManifoldTriple, AlgebraError> {
    let basis = spin_quadrupolar_basis();
    let [x, y, z] = printed_triple(label, &basis);
    let k1 = closure_coefficient(&x, &y, &z, label)?;
    let k2 = closure_coefficient(&y, &z, &x, label)?;
    let k3 = closure_coefficient(&z, &x, &y, label)?;
    if k1 * k3 <= 0.0 || k1 * k2 <= 0.0 {
        return Err(AlgebraError::ClosureFailed {
            label: label.name(),
            reason: format!("inconsistent closure signs κ = ({k1}, {k2}, {k3})"),
        });
    }
    let a = 1.0 / (k1 * k3).sqrt();
    let b = 1.0 / (k1 * k2).sqrt();
    let c = a * b * k1;
    let (xn, yn, zn) = (x * a, y * b, z * c);

    let casimir = xn * xn + yn * yn + zn * zn;
    let eig = casimir.0.symmetric_eigen();
    let mut projector = Matrix3::<C64>::zeros();
    let mut rank = 0;
    let mut value = 0.0;
    for k in 0..3 {
        if eig.eigenvalues[k] > 1e-9 {
            let v = eig.eigenvectors.column(k);
            projector += v * v.adjoint();
            rank += 1;
            value = eig.eigenvalues[k];
        }
    }
    let projector = OperatorMatrix(projector);
    let casimir_residual = (casimir - projector * value).frobenius_norm();
    if casimir_residual > 1e-10 {
        return Err(AlgebraError::ClosureFailed {
            label: label.name(),
            reason: format!("Casimir is not proportional to the active projector ({casimir_residual:.3e})"),
        });
    }
    // value = s(s+1)
    let spin = 0.5 * (-1.0 + (1.0 + 4.0 * value).sqrt());
    let triple = ManifoldTriple {
        label,
        x_op: xn,
        y_op: yn,
        z_op: zn,
        normalization: [a, b, c],
        active_subspace: projector,
        active_rank: rank,
        spin,
    };
    let residual = triple.closure_residual();
    if residual > 1e-10 {
        return Err(AlgebraError::ClosureFailed {
            label: label.name(),
            reason: format!("normalized closure residual {residual:.3e}"),
        });
    }
    Ok(triple)
}

/// Bright `(|1> + |3>)/√2` and dark `(|1> - |3>)/√2` states.
pub fn bright_state() -> Vector3<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector3::new(C64::new(s, 0.0), ZERO, C64::new(s, 0.0))
}

pub fn dark_state() -> Vector3<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Vector3::new(C64::new(s, 0.0), ZERO, C64::new(-s, 0.0))
}

pub fn level_state(level: usize) -> Vector3<C64> {
    let mut v = Vector3::zeros();
    v[level - 1] = ONE;
    v
}

// ---------------------------------------------------------------------------
// Two-site forms (9×9, site i is the left tensor factor).

pub fn kron(a: &OperatorMatrix, b: &OperatorMatrix) -> DMatrix<C64> {
    a.to_dmatrix().kronecker(&b.to_dmatrix())
}

/// `Σ_{i≠j}` over the ordered pairs (1,2) and (2,1) of `J1 Λ²¹_i Λ¹²_j + J2 Λ³²_i Λ²³_j`.
pub fn exchange_form(j1: f64, j2: f64) -> DMatrix<C64> {
    let l21 = lambda(2, 1);
    let l12 = lambda(1, 2);
    let l32 = lambda(3, 2);
    let l23 = lambda(2, 3);
    let c = |v: f64| C64::new(v, 0.0);
    (kron(&l21, &l12) + kron(&l12, &l21)) * c(j1) + (kron(&l32, &l23) + kron(&l23, &l32)) * c(j2)
}

/// `Σ_{i≠j} J (B⁺_i B⁻_j + D⁺_i D⁻_j)` for one pair, built from the manifold triples.
pub fn bright_dark_form(j: f64) -> Result<DMatrix<C64>, AlgebraError> {
    let bright = manifold_triple(ManifoldLabel::Bright)?;
    let dark = manifold_triple(ManifoldLabel::Dark)?;
    let mut h = DMatrix::zeros(9, 9);
    for t in [&bright, &dark] {
        let (up, down) = (t.raising(), t.lowering());
        h += kron(&up, &down) + kron(&down, &up);
    }
    Ok(h * C64::new(j, 0.0))
}

/// Readings of the twisting form `Σ_ij J [(X^A)² - (Y^A)² ± (X^B)² ∓ (Y^B)²]`
/// written with the printed (½-prefactor) A/B combinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwistingReading {
    /// Pairwise products `X_i X_j` over ordered pairs, signs as printed
    /// (`+` in front of the B-manifold terms), unit prefactor.
    PairwisePrinted,
    /// Squares of the two-site collective sums `(X_1 + X_2)²`, signs as printed.
    CollectivePrinted,
    /// Pairwise products with a relative minus sign on the B-manifold terms
    /// and prefactor 1/4; this is the reading equal to the exchange form.
    PairwiseResolved,
}

/// Two-site matrix of the twisting form at coupling `j` under `reading`.
pub fn twisting_form(j: f64, reading: TwistingReading) -> DMatrix<C64> {
    let basis = spin_quadrupolar_basis();
    let [xa, ya, _] = printed_triple(ManifoldLabel::A, &basis);
    let [xb, yb, _] = printed_triple(ManifoldLabel::B, &basis);
    let id = OperatorMatrix::identity();
    let pair = |o: &OperatorMatrix| kron(o, o) * C64::new(2.0, 0.0);
    let collective = |o: &OperatorMatrix| {
        let s = kron(o, &id) + kron(&id, o);
        &s * &s
    };
    let (h, prefactor) = match reading {
        TwistingReading::PairwisePrinted => (pair(&xa) - pair(&ya) + pair(&xb) - pair(&yb), 1.0),
        TwistingReading::CollectivePrinted => (
            collective(&xa) - collective(&ya) + collective(&xb) - collective(&yb),
            1.0,
        ),
        TwistingReading::PairwiseResolved => (pair(&xa) - pair(&ya) - pair(&xb) + pair(&yb), 0.25),
    };
    h * C64::new(j * prefactor, 0.0)
}

/// Frobenius norm of `a - b`, optionally after removing the best-fit
/// one-body part `O₁⊗I + I⊗O₂ + c·I⊗I`.
pub fn hamiltonian_form_residual(a: &DMatrix<C64>, b: &DMatrix<C64>, remove_one_body: bool) -> f64 {
    let diff = a - b;
    if !remove_one_body {
        return frobenius(&diff);
    }
    frobenius(&(&diff - one_body_part(&diff)))
}

/// Hilbert–Schmidt projection of a two-site operator onto one-body terms.
pub fn one_body_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    let basis = spin_quadrupolar_basis();
    let id = OperatorMatrix::identity();
    let mut out = kron(&id, &id) * (m.trace() / 9.0);
    for g in basis.generators.iter() {
        for op in [kron(g, &id), kron(&id, g)] {
            // tr((L⊗I)²) = 2·3
            let coef = (op.adjoint() * m).trace() / (GENERATOR_NORM * 3.0);
            out += op * coef;
        }
    }
    out
}

pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real symmetric `k^{ab}` with `P = Σ_ab k^{ab} L_a ⊗ L_b`, plus the norm of
/// whatever part of `P` is not of that form (one-body or constant pieces).
pub fn two_body_coefficients(p: &DMatrix<C64>, basis: &OperatorBasis) -> ([[f64; 8]; 8], f64) {
    let mut k = [[0.0; 8]; 8];
    let mut rebuilt = DMatrix::zeros(9, 9);
    for a in 0..8 {
        for b in 0..8 {
            let op = kron(&basis.generators[a], &basis.generators[b]);
            let coef = (op.adjoint() * p).trace() / (GENERATOR_NORM * GENERATOR_NORM);
            k[a][b] = coef.re;
            rebuilt += op * C64::new(coef.re, 0.0);
        }
    }
    (k, frobenius(&(p - rebuilt)))
}
