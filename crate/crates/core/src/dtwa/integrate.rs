//! Time stepping for trajectory batches: adaptive Dormand–Prince 5(4) with
//! a step shared by the batch, or fixed-step classical RK4.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dtwa::model::{MeanFieldModel, DIM};
use crate::error::DtwaError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorMethod {
    Adaptive,
    Rk4,
}

fn default_method() -> IntegratorMethod {
    IntegratorMethod::Adaptive
}

fn default_tol() -> f64 {
    1e-8
}

fn default_casimir_tol() -> f64 {
    1e-6
}

fn default_max_steps() -> usize {
    10_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_method")]
    pub method: IntegratorMethod,
    #[serde(default = "default_tol")]
    pub rtol: f64,
    #[serde(default = "default_tol")]
    pub atol: f64,
    /// Step for RK4; ignored by the adaptive method.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_casimir_tol")]
    pub casimir_tolerance: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: default_method(),
            rtol: default_tol(),
            atol: default_tol(),
            dt: None,
            casimir_tolerance: default_casimir_tol(),
            max_steps: default_max_steps(),
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64) -> Self {
        Self {
            method: IntegratorMethod::Rk4,
            dt: Some(dt),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DtwaError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match self.method {
            IntegratorMethod::Adaptive if !(positive(self.rtol) && positive(self.atol)) => {
                Err(DtwaError::BadConfig("rtol and atol must be positive".into()))
            }
            IntegratorMethod::Rk4 if !self.dt.is_some_and(positive) => {
                Err(DtwaError::BadConfig("rk4 needs a positive dt".into()))
            }
            _ if !positive(self.casimir_tolerance) => {
                Err(DtwaError::BadConfig("casimir_tolerance must be positive".into()))
            }
            _ if self.max_steps == 0 => Err(DtwaError::BadConfig("max_steps must be positive".into())),
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<(), DtwaError> {
    if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| !(w[1] >= w[0])) || !times[times.len() - 1].is_finite() {
        return Err(DtwaError::BadTimeGrid);
    }
    Ok(())
}

/// Integrates a batch over the grid, calling `observer(k, y)` at every grid
/// time (including `t = 0`).
pub fn integrate_batch<F>(
    model: &MeanFieldModel,
    y0: DMatrix<f64>,
    times: &[f64],
    config: &IntegratorConfig,
    mut observer: F,
) -> Result<(), DtwaError>
where
    F: FnMut(usize, &DMatrix<f64>),
{
    config.validate()?;
    check_grid(times)?;
    let mut stepper = Stepper::new(model, y0);
    observer(0, &stepper.y);
    let mut steps = 0usize;
    let mut h = f64::NAN;
    for k in 1..times.len() {
        let target = times[k];
        match config.method {
            IntegratorMethod::Rk4 => {
                let span = target - stepper.t;
                if span > 0.0 {
                    let count = (span / config.dt.unwrap()).ceil().max(1.0) as usize;
                    let dt = span / count as f64;
                    for _ in 0..count {
                        stepper.rk4(dt);
                    }
                    steps += count;
                }
                stepper.t = target;
            }
            IntegratorMethod::Adaptive => {
                if h.is_nan() {
                    h = stepper.initial_step(target, config);
                }
                while stepper.t < target {
                    let remaining = target - stepper.t;
                    let last = h >= remaining;
                    let trial = if last { remaining } else { h };
                    let err = stepper.dopri_trial(trial, config);
                    steps += 1;
                    if steps > config.max_steps {
                        return Err(DtwaError::StepUnderflow(stepper.t));
                    }
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    if err <= 1.0 {
                        stepper.accept(trial);
                        if last {
                            stepper.t = target;
                        }
                        // keep the unclamped step as the next guess when landing on a grid point
                        h = if last { h.max(trial * factor) } else { trial * factor };
                    } else {
                        h = trial * factor;
                    }
                    if h < 1e-14 * target.abs().max(1.0) {
                        return Err(DtwaError::StepUnderflow(stepper.t));
                    }
                }
            }
        }
        if stepper.y.iter().any(|v| !v.is_finite()) {
            return Err(DtwaError::StepUnderflow(stepper.t));
        }
        observer(k, &stepper.y);
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are unused).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    model: &'a MeanFieldModel,
    t: f64,
    y: DMatrix<f64>,
    k: Vec<DMatrix<f64>>,
    /// `k[0]` holds `f(t, y)` (first-same-as-last).
    k0_valid: bool,
    y_trial: DMatrix<f64>,
    scratch: DMatrix<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a MeanFieldModel, y: DMatrix<f64>) -> Self {
        let shape = y.shape();
        let zeros = || DMatrix::zeros(shape.0, shape.1);
        Self {
            model,
            t: 0.0,
            k: (0..7).map(|_| zeros()).collect(),
            k0_valid: false,
            y_trial: zeros(),
            scratch: zeros(),
            y,
        }
    }

    fn eval(&mut self, stage: usize, input_is_trial: bool) {
        let (model, scratch) = (self.model, &mut self.scratch);
        let src = if input_is_trial { &self.y_trial } else { &self.y };
        model.rhs(src, &mut self.k[stage], scratch);
    }

    fn ensure_k0(&mut self) {
        if !self.k0_valid {
            self.eval(0, false);
            self.k0_valid = true;
        }
    }

    fn initial_step(&mut self, first_target: f64, config: &IntegratorConfig) -> f64 {
        self.ensure_k0();
        let scale = |y: f64| config.atol + config.rtol * y.abs();
        let d0 = rms(self.y.iter().map(|&y| y / scale(y)));
        let d1 = rms(self.y.iter().zip(self.k[0].iter()).map(|(&y, &f)| f / scale(y)));
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(first_target.max(1e-12))
    }

    /// Computes a trial step into `y_trial`; returns the scaled error (max over
    /// trajectories of their RMS error).
    fn dopri_trial(&mut self, h: f64, config: &IntegratorConfig) -> f64 {
        self.ensure_k0();
        for s in 1..7 {
            self.y_trial.copy_from(&self.y);
            for (j, &a) in A[s].iter().enumerate().take(s) {
                if a != 0.0 {
                    axpy(&mut self.y_trial, h * a, &self.k[j]);
                }
            }
            self.eval(s, true);
        }
        // y_trial now holds the fifth-order solution (stage 7 input).
        let n = self.y.nrows();
        let batch = self.y.ncols() / DIM;
        let (y, yt) = (self.y.as_slice(), self.y_trial.as_slice());
        let _ = (n, batch);
        let mut worst: f64 = 0.0;
        for idx in 0..y.len() {
            let e: f64 = (0..7).map(|s| E[s] * self.k[s].as_slice()[idx]).sum::<f64>() * h;
            let sc = config.atol + config.rtol * y[idx].abs().max(yt[idx].abs());
            worst = worst.max((e / sc).abs());
        }
        worst
    }

    fn accept(&mut self, h: f64) {
        std::mem::swap(&mut self.y, &mut self.y_trial);
        self.k.swap(0, 6);
        self.t += h;
        self.k0_valid = true;
    }

    fn rk4(&mut self, h: f64) {
        self.eval(0, false);
        self.y_trial.copy_from(&self.y);
        axpy(&mut self.y_trial, 0.5 * h, &self.k[0]);
        self.eval(1, true);
        self.y_trial.copy_from(&self.y);
        axpy(&mut self.y_trial, 0.5 * h, &self.k[1]);
        self.eval(2, true);
        self.y_trial.copy_from(&self.y);
        axpy(&mut self.y_trial, h, &self.k[2]);
        self.eval(3, true);
        let w = [h / 6.0, h / 3.0, h / 3.0, h / 6.0];
        for (s, &ws) in w.iter().enumerate() {
            axpy(&mut self.y, ws, &self.k[s]);
        }
        self.t += h;
        self.k0_valid = false;
    }
}

/// `y += a x`
fn axpy(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (mut acc, mut count) = (0.0, 0usize);
    for v in values {
        acc += v * v;
        count += 1;
    }
    (acc / count.max(1) as f64).sqrt()
}
