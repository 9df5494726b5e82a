//! Squeezing parameter and Fisher-information proxy from collective-spin moments,
//! and extraction of optima over evolution time and drive strength.
//!
//! `ξ² = N λ_min(C)/|<S>|²` and `F_Q = 4 λ_max(C)`, where `C` is the 2×2
//! covariance of the collective spin restricted to the plane perpendicular to
//! the mean spin `<S>`. `|S|` is the mean-spin length, which makes `ξ² = 1` for
//! a spin-1/2 coherent state.

use serde::{Deserialize, Serialize};

use crate::error::MetrologyError;

/// Relative threshold below which the mean spin counts as zero.
const ZERO_SPIN: f64 = 1e-12;

/// First and second moments of a normalized manifold's collective `(X, Y, Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMoments {
    pub mean: [f64; 3],
    pub cov: [[f64; 3]; 3],
    pub n_atoms: usize,
    /// Standard errors of `(mean, cov)` when the moments are estimated.
    pub stderr: Option<([f64; 3], [[f64; 3]; 3])>,
}

impl SpinMoments {
    pub fn coherent(n: usize, spin: f64) -> Self {
        let nf = n as f64;
        let mut cov = [[0.0; 3]; 3];
        cov[1][1] = nf * spin / 2.0;
        cov[2][2] = nf * spin / 2.0;
        Self {
            mean: [nf * spin, 0.0, 0.0],
            cov,
            n_atoms: n,
            stderr: None,
        }
    }

    pub fn spin_length(&self) -> f64 {
        norm3(&self.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingResult {
    /// `+∞` when the mean spin vanishes.
    pub xi2: f64,
    /// `2ξ²`, set only for antisymmetric runs.
    pub xi2_a: Option<f64>,
    pub fq: f64,
    pub min_direction: [f64; 3],
    pub max_direction: [f64; 3],
    pub spin_length: f64,
}

impl SqueezingResult {
    pub fn zero_spin(&self) -> bool {
        self.xi2.is_infinite()
    }

    /// The squeezing figure reported for the run (`ξ²_A` when set).
    pub fn reported_xi2(&self) -> f64 {
        self.xi2_a.unwrap_or(self.xi2)
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn quad(cov: &[[f64; 3]; 3], u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            s += u[k] * cov[k][l] * v[l];
        }
    }
    s
}

/// Orthonormal `(e₁, e₂)` spanning the plane perpendicular to `n` (unit).
/// `e₁` is built from the coordinate axis least aligned with `n`, so the
/// frame depends only on `n`.
pub fn perpendicular_frame(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut k = 0;
    for i in 1..3 {
        if n[i].abs() < n[k].abs() {
            k = i;
        }
    }
    let mut axis = [0.0; 3];
    axis[k] = 1.0;
    let e1 = cross(n, &axis);
    let len = norm3(&e1);
    let e1 = e1.map(|c| c / len);
    let e2 = cross(n, &e1);
    (e1, e2)
}

/// Eigen-decomposition of the symmetric 2×2 `[[a, b], [b, c]]`, returning
/// `(λ_min, λ_max, v_min)`; ties give `v_min = (1, 0)`.
fn eig2(a: f64, b: f64, c: f64) -> (f64, f64, [f64; 2]) {
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (lo, hi) = (mid - rad, mid + rad);
    let scale = a.abs().max(c.abs()).max(b.abs()).max(f64::MIN_POSITIVE);
    if rad <= 1e-12 * scale {
        return (lo, hi, [1.0, 0.0]);
    }
    // (A - lo) v = 0 with the better-conditioned row.
    let v = if (a - lo).abs() >= (c - lo).abs() {
        [-b, a - lo]
    } else {
        [c - lo, -b]
    };
    let len = (v[0] * v[0] + v[1] * v[1]).sqrt();
    (lo, hi, [v[0] / len, v[1] / len])
}

/// Largest eigenvalue of a symmetric 3×3 matrix.
fn max_eigenvalue3(m: &[[f64; 3]; 3]) -> f64 {
    let mat = nalgebra::Matrix3::from_fn(|r, c| 0.5 * (m[r][c] + m[c][r]));
    mat.symmetric_eigenvalues().max()
}

/// Squeezing `ξ²` and `F_Q` from spin moments. With `antisymmetric` set the
/// result also carries `ξ²_A = 2ξ²`.
///
/// If the mean spin vanishes, `ξ²` is undefined and reported as `+∞`; `F_Q`
/// then uses the largest covariance eigenvalue over all directions.
pub fn squeezing_and_fisher(m: &SpinMoments, antisymmetric: bool) -> SqueezingResult {
    let length = m.spin_length();
    let scale = m.n_atoms.max(1) as f64;
    if length <= ZERO_SPIN * scale {
        return SqueezingResult {
            xi2: f64::INFINITY,
            xi2_a: antisymmetric.then_some(f64::INFINITY),
            fq: 4.0 * max_eigenvalue3(&m.cov),
            min_direction: [0.0; 3],
            max_direction: [0.0; 3],
            spin_length: length,
        };
    }
    let n = m.mean.map(|c| c / length);
    let (e1, e2) = perpendicular_frame(&n);
    let c11 = quad(&m.cov, &e1, &e1);
    let c22 = quad(&m.cov, &e2, &e2);
    let c12 = 0.5 * (quad(&m.cov, &e1, &e2) + quad(&m.cov, &e2, &e1));
    let (lo, hi, v) = eig2(c11, c12, c22);
    let min_dir: [f64; 3] = std::array::from_fn(|k| v[0] * e1[k] + v[1] * e2[k]);
    let max_dir = cross(&n, &min_dir);
    let xi2 = m.n_atoms as f64 * lo / (length * length);
    SqueezingResult {
        xi2,
        xi2_a: antisymmetric.then_some(2.0 * xi2),
        fq: 4.0 * hi,
        min_direction: min_dir,
        max_direction: max_dir,
        spin_length: length,
    }
}

/// Location of an extremum on a sampled trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    /// The grid optimum sits on the first or last sample.
    pub at_boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// Grid extremum (first occurrence) refined by the parabola through its
/// neighbors. The refined abscissa is clamped to the bracketing interval.
pub fn refine_extremum(times: &[f64], values: &[f64], kind: Extremum) -> Result<Optimum, MetrologyError> {
    if values.is_empty() {
        return Err(MetrologyError::EmptyTrace);
    }
    if times.len() != values.len() {
        return Err(MetrologyError::LengthMismatch(times.len(), values.len()));
    }
    let better = |a: f64, b: f64| match kind {
        Extremum::Min => a < b,
        Extremum::Max => a > b,
    };
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && (!values[k].is_finite() || better(v, values[k])) {
            k = i;
        }
    }
    let last = values.len() - 1;
    if k == 0 || k == last {
        return Ok(Optimum {
            index: k,
            time: times[k],
            value: values[k],
            at_boundary: true,
        });
    }
    let (t0, t1, t2) = (times[k - 1], times[k], times[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let mut time = t1;
    let mut value = y1;
    if y0.is_finite() && y2.is_finite() {
        // Vertex of the interpolating parabola (Newton divided differences).
        let d01 = (y1 - y0) / (t1 - t0);
        let d12 = (y2 - y1) / (t2 - t1);
        let curvature = (d12 - d01) / (t2 - t0);
        let curvature_ok = match kind {
            Extremum::Min => curvature > 0.0,
            Extremum::Max => curvature < 0.0,
        };
        if curvature_ok {
            let tv = (0.5 * (t0 + t1) - d01 / (2.0 * curvature)).clamp(t0, t2);
            let yv = y0 + d01 * (tv - t0) + curvature * (tv - t0) * (tv - t1);
            if !better(y1, yv) {
                time = tv;
                value = yv;
            }
        }
    }
    Ok(Optimum {
        index: k,
        time,
        value,
        at_boundary: false,
    })
}

/// Optimal squeezing and Fisher information along one time trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeOptimum {
    pub xi2: Optimum,
    pub fq: Optimum,
}

pub fn optimize_over_time(times: &[f64], trace: &[SqueezingResult]) -> Result<TimeOptimum, MetrologyError> {
    let xi: Vec<f64> = trace.iter().map(|r| r.xi2).collect();
    let fq: Vec<f64> = trace.iter().map(|r| r.fq).collect();
    Ok(TimeOptimum {
        xi2: refine_extremum(times, &xi, Extremum::Min)?,
        fq: refine_extremum(times, &fq, Extremum::Max)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriveOptimum {
    pub omega: f64,
    pub index: usize,
    pub xi2_min: f64,
    pub fq_max: f64,
    pub at_boundary: bool,
    /// Every sample has the same `ξ²_min`.
    pub degenerate: bool,
}

/// Picks the drive minimizing `ξ²_min` from `(Ω, ξ²_min, F_Q,max)` samples.
/// Ties go to the smaller `Ω`.
pub fn optimize_over_drive(samples: &[(f64, f64, f64)]) -> Result<DriveOptimum, MetrologyError> {
    if samples.is_empty() {
        return Err(MetrologyError::EmptyDriveScan);
    }
    if samples.len() < 3 {
        return Err(MetrologyError::TooFewDriveSamples(samples.len()));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].0.total_cmp(&samples[b].0));
    let mut best = order[0];
    for &i in &order[1..] {
        if samples[i].1 < samples[best].1 {
            best = i;
        }
    }
    let first = samples[order[0]].1;
    let degenerate = samples.iter().all(|s| s.1 == first);
    let rank = order.iter().position(|&i| i == best).unwrap();
    Ok(DriveOptimum {
        omega: samples[best].0,
        index: best,
        xi2_min: samples[best].1,
        fq_max: samples[best].2,
        at_boundary: degenerate || rank == 0 || rank == order.len() - 1,
        degenerate,
    })
}
