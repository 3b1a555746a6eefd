use thiserror::Error;

/// Errors raised across the crate. Variants carry enough context to name the
/// offending quantity; solver failures map onto distinct CLI exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("period {index} is not positive ({value})")]
    NonPositivePeriod { index: usize, value: f64 },
    #[error("complex dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("form has the wrong bidegree: expected {expected}, found {found}")]
    BidegreeMismatch { expected: &'static str, found: &'static str },
    #[error("ball radius {radius} is not below the embedding radius {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("section does not live on the bundle of the connection: {0}")]
    BundleMismatch(String),
    #[error("gauge transformation is not unitary (defect {0:e})")]
    NonUnitaryGauge(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("flux through axis {axis} is not integral ({value})")]
    NonIntegralFlux { axis: usize, value: f64 },
    #[error("sigma denominator (r1+r2)*tau_hat - deg1 - deg2 = {0} is not positive")]
    NonpositiveSigmaDenominator(f64),
    #[error("parameter tau = {tau} violates the existence threshold (slope {slope} vs tau_hat {tau_hat})")]
    ThresholdViolated { tau: f64, slope: f64, tau_hat: f64 },
    #[error("solver diverged after {iterations} iterations: {reason}")]
    Diverged { iterations: usize, reason: String },
    #[error("linearization is singular: {0}")]
    SingularLinearization(String),
    #[error("iteration limit {0} reached before convergence")]
    MaxIters(usize),
    #[error("data are incompatible with the bundle topology (mismatch {0:e})")]
    IncompatibleTopology(f64),
    #[error("input residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("field amplitude {0:e} is outside the small-field regime")]
    FieldTooLarge(f64),
    #[error("hypothesis not met: {0}")]
    HypothesisUnmet(String),
    #[error("subobject is empty")]
    EmptySubobject,
    #[error("second factor of a triple must have rank 1 (got {0})")]
    RankTwoSecondFactor(usize),
    #[error("unsupported rank {0} (ranks up to 3 are supported)")]
    UnsupportedRank(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("artifact missing: {0}")]
    ArtifactMissing(String),
    #[error("artifact corrupt: {0}")]
    ArtifactCorrupt(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::ArtifactCorrupt(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
