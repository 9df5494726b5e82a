use thiserror::Error;

/// Failures raised while building or validating the single-site operator algebra.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("level index {0} out of range (expected 1..=3)")]
    LevelOutOfRange(usize),
    #[error("operator is not Hermitian (anti-Hermitian residual {0:.3e})")]
    NotHermitian(f64),
    #[error("basis is not Hilbert-Schmidt orthogonal (Gram residual {0:.3e})")]
    NonOrthogonalBasis(f64),
    #[error("commutator re-expansion residual {0:.3e} exceeds tolerance")]
    ReexpansionResidual(f64),
    #[error("{label} triple does not close as su(2) under any rescaling: {reason}")]
    ClosureFailed { label: &'static str, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("geometry has zero sites")]
    NoSites,
    #[error("unsupported lattice dimension {0} (expected 1 or 2)")]
    BadDimension(usize),
    #[error("extents {0:?} do not match dimension {1}")]
    BadExtents(Vec<usize>, usize),
    #[error("lattice spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("quantization axis must be a nonzero finite vector")]
    BadAxis,
    #[error("coupling scale J1 must be nonzero and finite")]
    ZeroCoupling,
    #[error("power-law exponent must be 0 or 3, got {0}")]
    BadExponent(u32),
    #[error("interaction ratio Jr must be finite, got {0}")]
    BadRatio(f64),
    #[error("initial state amplitudes must be finite and not all zero")]
    BadAmplitudes,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("atom count must be at least 1")]
    NoAtoms,
    #[error("full Hilbert space for N = {n} exceeds the cap N <= {cap}")]
    ExceedsCap { n: usize, cap: usize },
    #[error("dimension mismatch: operator {op} vs state {state}")]
    DimensionMismatch { op: usize, state: usize },
    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),
    #[error("time grid must start at 0 and be ascending")]
    BadTimeGrid,
    #[error("Krylov propagation failed at t = {t}: {reason}; try a smaller step tolerance or a larger subspace")]
    KrylovBreakdown { t: f64, reason: String },
    #[error("norm drift {drift:.3e} at t = {t} exceeds 1e-8")]
    NormDrift { t: f64, drift: f64 },
    #[error("interaction ratio must be finite")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtwaError {
    #[error("sampling probabilities for generator {generator} sum to {sum} (expected 1)")]
    ProbabilitySum { generator: &'static str, sum: f64 },
    #[error("site state must have unit norm, got {0}")]
    NotNormalized(f64),
    #[error("integrator configuration invalid: {0}")]
    BadConfig(String),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("Casimir drift {drift:.3e} exceeds tolerance {tolerance:.1e}; run is degraded")]
    CasimirDrift { drift: f64, tolerance: f64 },
    #[error("time grid must start at 0 and be ascending")]
    BadTimeGrid,
    #[error("ensemble has no trajectories")]
    EmptyEnsemble,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("empty trace")]
    EmptyTrace,
    #[error("trace length mismatch: {0} times vs {1} values")]
    LengthMismatch(usize, usize),
    #[error("no drive samples")]
    EmptyDriveScan,
    #[error("drive optimization needs at least 3 samples, got {0}")]
    TooFewDriveSamples(usize),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("power-law fit needs at least 3 points in the window, got {0}")]
    TooFewPoints(usize),
    #[error("power-law fit requires positive values, got N = {n}, y = {y}")]
    NonPositive { n: f64, y: f64 },
    #[error("time grids do not match")]
    MismatchedGrids,
    #[error("run for N = {n} failed: {source}")]
    Member {
        n: usize,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Dtwa(#[from] DtwaError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Numerical-quality failures, as opposed to configuration or I/O problems.
    pub fn is_numerical(&self) -> bool {
        match self {
            ExperimentError::Exact(e) => matches!(
                e,
                ExactError::KrylovBreakdown { .. } | ExactError::NormDrift { .. }
            ),
            ExperimentError::Dtwa(e) => matches!(e, DtwaError::StepUnderflow(_) | DtwaError::CasimirDrift { .. }),
            ExperimentError::Member { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
