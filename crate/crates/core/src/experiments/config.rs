//! Run configuration: JSON schema, dotted-path overrides and derived
//! quantities (time grids, drive scans, manifold defaults).

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::ManifoldLabel;
use crate::dtwa::DtwaConfig;
use crate::error::ExperimentError;
use crate::exact::{KrylovConfig, DEFAULT_FULL_CAP};
use crate::lattice::{CouplingMatrices, CouplingSpec, GeometrySpec, InitialStateKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactSymmetric,
    ExactFull,
    Dtwa,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ExactSymmetric => "exact_symmetric",
            Method::ExactFull => "exact_full",
            Method::Dtwa => "dtwa",
        }
    }
}

fn default_points() -> usize {
    400
}

/// Uniform grid `t_k = k·t_max/(points-1)`. Without an explicit `t_max`
/// the window follows the interaction timescale: `c/(J̄√N)` for the
/// symmetric manifolds (past the first Fisher-information maximum of
/// one-axis twisting) and `c/(J̄N)` for the antisymmetric ones, where `J̄`
/// is the mean pair coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Prefactor `c` of the automatic window (3 symmetric, 12 antisymmetric).
    #[serde(default)]
    pub scale: Option<f64>,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_max: None,
            points: default_points(),
            scale: None,
        }
    }
}

impl TimeGrid {
    pub fn window(&self, n: usize, mean_coupling: f64, antisymmetric: bool) -> f64 {
        if let Some(t) = self.t_max {
            return t;
        }
        let n = n as f64;
        let j = mean_coupling.abs().max(f64::MIN_POSITIVE);
        if antisymmetric {
            self.scale.unwrap_or(12.0) / (j * n)
        } else {
            self.scale.unwrap_or(3.0) / (j * n.sqrt())
        }
    }

    pub fn times(&self, n: usize, mean_coupling: f64, antisymmetric: bool) -> Vec<f64> {
        let t_max = self.window(n, mean_coupling, antisymmetric);
        if self.points == 1 {
            return vec![0.0];
        }
        (0..self.points)
            .map(|k| t_max * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

fn default_scan_count() -> usize {
    8
}
fn default_scan_lo() -> f64 {
    0.1
}
fn default_scan_hi() -> f64 {
    10.0
}
fn default_refine_points() -> usize {
    4
}

/// Drive values to optimize over. Without explicit `values`, `count`
/// log-spaced points span `[lo, hi]·|J̄|·√N`. Each refinement round inserts
/// `refine_points` evenly spaced values between the neighbors of the
/// current optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaScan {
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default = "default_scan_count")]
    pub count: usize,
    #[serde(default = "default_scan_lo")]
    pub lo: f64,
    #[serde(default = "default_scan_hi")]
    pub hi: f64,
    #[serde(default)]
    pub refine_rounds: usize,
    #[serde(default = "default_refine_points")]
    pub refine_points: usize,
}

impl Default for OmegaScan {
    fn default() -> Self {
        Self {
            values: None,
            count: default_scan_count(),
            lo: default_scan_lo(),
            hi: default_scan_hi(),
            refine_rounds: 0,
            refine_points: default_refine_points(),
        }
    }
}

impl OmegaScan {
    pub fn initial_values(&self, n: usize, mean_coupling: f64) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let unit = mean_coupling.abs() * (n as f64).sqrt();
        let (lo, hi) = (self.lo * unit, self.hi * unit);
        if self.count == 1 {
            return vec![lo];
        }
        (0..self.count)
            .map(|i| lo * (hi / lo).powf(i as f64 / (self.count - 1) as f64))
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    /// Collective `Ω D_xy` drive, in units of `J1`.
    #[serde(default)]
    pub omega: f64,
    /// `(Ω₁, Ω₂)` ladder drives; zero for the quench protocol.
    #[serde(default)]
    pub ladder: [f64; 2],
    /// When present, `omega` is ignored and optimized over these values.
    #[serde(default)]
    pub scan: Option<OmegaScan>,
}

/// Sizes for `sweep`: `N` for chains, `L` (an `L×L` array) in 2D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    /// Inclusive `[N_min, N_max]` fit window. Defaults to every size for
    /// symmetric runs and `N ≥ 200` for antisymmetric all-to-all runs.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    /// Exact method the configured run is compared against.
    pub reference: Method,
}

fn default_cap() -> usize {
    DEFAULT_FULL_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub geometry: GeometrySpec,
    pub coupling: CouplingSpec,
    /// Defaults to `sax` for `Jr < 0` and `bx` otherwise.
    #[serde(default)]
    pub initial_state: Option<InitialStateKind>,
    /// Defaults from the initial state (see [`RunConfig::manifold`]).
    #[serde(default)]
    pub manifold: Option<ManifoldLabel>,
    #[serde(default)]
    pub drive: DriveSpec,
    #[serde(default)]
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub dtwa: DtwaConfig,
    #[serde(default)]
    pub krylov: KrylovConfig,
    /// Largest `N` accepted by `exact_full`.
    #[serde(default = "default_cap")]
    pub full_cap: usize,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub bench: Option<BenchSpec>,
}

impl RunConfig {
    /// Minimal config for `N` all-to-all sites.
    pub fn all_to_all(method: Method, n: usize, jr: f64) -> Self {
        Self {
            method,
            geometry: GeometrySpec::chain(n),
            coupling: CouplingSpec::all_to_all(jr),
            initial_state: None,
            manifold: None,
            drive: DriveSpec::default(),
            time_grid: TimeGrid::default(),
            dtwa: DtwaConfig::default(),
            krylov: KrylovConfig::default(),
            full_cap: default_cap(),
            sweep: None,
            bench: None,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.geometry.site_count()
    }

    pub fn initial_state(&self) -> InitialStateKind {
        self.initial_state.clone().unwrap_or(if self.coupling.jr < 0.0 {
            InitialStateKind::Sax
        } else {
            InitialStateKind::Bx
        })
    }

    /// Bright for `bx`, Dark for `dx`, A for `sax`, B for `sbx`; other
    /// states follow the sign of `Jr` (A when negative, Bright otherwise).
    pub fn manifold(&self) -> ManifoldLabel {
        if let Some(m) = self.manifold {
            return m;
        }
        match self.initial_state() {
            InitialStateKind::Bx => ManifoldLabel::Bright,
            InitialStateKind::Dx => ManifoldLabel::Dark,
            InitialStateKind::Sax => ManifoldLabel::A,
            InitialStateKind::Sbx => ManifoldLabel::B,
            _ if self.coupling.jr < 0.0 => ManifoldLabel::A,
            _ => ManifoldLabel::Bright,
        }
    }

    pub fn antisymmetric(&self) -> bool {
        matches!(self.manifold(), ManifoldLabel::A | ManifoldLabel::B)
    }

    /// Config for one sweep member of linear size `size`.
    pub fn with_size(&self, size: usize) -> Self {
        let mut c = self.clone();
        c.geometry.extents = vec![size; c.geometry.dimension.max(1)];
        c.sweep = None;
        c
    }

    /// Structural checks that do not need the Hamiltonian.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.coupling.validate()?;
        let n = self.n_sites();
        if n == 0 {
            return bad("geometry has zero sites".into());
        }
        match self.method {
            Method::ExactSymmetric if !self.coupling.is_all_to_all() => {
                return bad("exact_symmetric requires all-to-all couplings (alpha = 0)".into())
            }
            Method::ExactFull if n > self.full_cap => {
                return bad(format!("exact_full needs N <= full_cap = {}, got N = {n}", self.full_cap))
            }
            _ => {}
        }
        if self.time_grid.points == 0 {
            return bad("time_grid.points must be positive".into());
        }
        if let Some(t) = self.time_grid.t_max {
            if !(t.is_finite() && t >= 0.0) {
                return bad(format!("time_grid.t_max must be finite and non-negative, got {t}"));
            }
        }
        if !self.drive.omega.is_finite() || self.drive.ladder.iter().any(|v| !v.is_finite()) {
            return bad("drive values must be finite".into());
        }
        if let Some(scan) = &self.drive.scan {
            let count = scan.values.as_ref().map_or(scan.count, |v| v.len());
            if count < 3 {
                return bad(format!("drive.scan needs at least 3 values, got {count}"));
            }
            if scan.values.is_none() && !(scan.lo > 0.0 && scan.hi > scan.lo) {
                return bad("drive.scan needs 0 < lo < hi".into());
            }
            if let Some(v) = &scan.values {
                if v.iter().any(|x| !x.is_finite()) {
                    return bad("drive.scan.values must be finite".into());
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.sizes.len() < 3 {
                return bad(format!("sweep needs at least 3 sizes, got {}", s.sizes.len()));
            }
        }
        Ok(())
    }

    /// Reads a config from JSON text, applying `key=value` overrides first.
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self, ExperimentError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| located(&e))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: RunConfig = serde_json::from_value(value).map_err(|e| {
            if overrides.is_empty() {
                // Re-parse from text for line information.
                match serde_json::from_str::<RunConfig>(text) {
                    Err(e2) => located(&e2),
                    Ok(_) => ExperimentError::Config(e.to_string()),
                }
            } else {
                ExperimentError::Config(format!("{e} (after applying overrides)"))
            }
        })?;
        config.validate()?;
        Ok(config)
    }
}

fn located(e: &serde_json::Error) -> ExperimentError {
    ExperimentError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Sets `a.b.c=value`, creating intermediate objects. The value is parsed
/// as JSON when possible (`3`, `true`, `[1,2]`, `"bx"`), else taken as a
/// string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ExperimentError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ExperimentError::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ExperimentError::Config(format!("override key `{path}` is malformed")));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (depth, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just set")
            }
            _ => {
                return Err(ExperimentError::Config(format!(
                    "override `{path}`: `{}` is not an object",
                    keys[..depth].join(".")
                )))
            }
        };
        if depth + 1 == keys.len() {
            obj.insert(key.to_string(), parsed);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("path has at least one key")
}

/// Mean off-diagonal `J1_ij`; `J1` itself for a single site.
pub fn mean_coupling(c: &CouplingMatrices) -> f64 {
    let n = c.n_sites();
    if let Some(j) = c.uniform {
        return j;
    }
    if n < 2 {
        return 1.0;
    }
    let total: f64 = c.j1.iter().sum::<f64>() - c.j1.diagonal().sum();
    total / (n * (n - 1)) as f64
}
