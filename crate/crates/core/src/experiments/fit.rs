//! Log–log least-squares power laws `y = A·N^p`.

use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub amplitude: f64,
    pub exponent_stderr: f64,
    /// Smallest and largest `N` that entered the fit.
    pub window: [f64; 2],
    pub n_points: usize,
    /// Residual sum of squares in `ln y`.
    pub residual: f64,
}

/// Ordinary least squares on `(ln N, ln y)` over points with `N` inside
/// `window`. The exponent standard error comes from the residual variance
/// `RSS/(n-2)`.
pub fn power_law_fit(points: &[(f64, f64)], window: [f64; 2]) -> Result<FitResult, ExperimentError> {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ns = Vec::new();
    for &(n, y) in &sorted {
        if !(n >= window[0] && n <= window[1]) {
            continue;
        }
        if !(n > 0.0 && y > 0.0 && y.is_finite()) {
            return Err(ExperimentError::NonPositive { n, y });
        }
        ns.push(n);
        xs.push(n.ln());
        ys.push(y.ln());
    }
    let m = xs.len();
    if m < 3 {
        return Err(ExperimentError::TooFewPoints(m));
    }
    let mf = m as f64;
    let xbar = xs.iter().sum::<f64>() / mf;
    let ybar = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ExperimentError::TooFewPoints(1));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residual: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(FitResult {
        exponent: slope,
        amplitude: intercept.exp(),
        exponent_stderr: (residual / (mf - 2.0) / sxx).sqrt(),
        window: [ns[0], ns[m - 1]],
        n_points: m,
        residual,
    })
}
