use std::fmt;

use vortexlab_core::Error;

/// Process exit codes.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "ConfigInvalid", message: message.into() }
    }
    pub fn verification(message: impl Into<String>) -> Self {
        Self { code: EXIT_VERIFICATION, kind: "VerificationFailed", message: message.into() }
    }
    pub fn diverged(message: impl Into<String>) -> Self {
        Self { code: EXIT_DIVERGED, kind: "Diverged", message: message.into() }
    }
    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_OTHER, kind: "Io", message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

/// Short machine-readable name of a core error.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::NonPositivePeriod { .. } => "NonPositivePeriod",
        Error::UnsupportedDimension(_) => "UnsupportedDimension",
        Error::InvalidGrid(_) => "InvalidGrid",
        Error::BidegreeMismatch { .. } => "BidegreeMismatch",
        Error::RadiusTooLarge { .. } => "RadiusTooLarge",
        Error::BundleMismatch(_) => "BundleMismatch",
        Error::NonUnitaryGauge(_) => "NonUnitaryGauge",
        Error::ShapeMismatch(_) => "ShapeMismatch",
        Error::NonIntegralFlux { .. } => "NonIntegralFlux",
        Error::NonpositiveSigmaDenominator(_) => "NonpositiveSigmaDenominator",
        Error::ThresholdViolated { .. } => "ThresholdViolated",
        Error::Diverged { .. } => "Diverged",
        Error::SingularLinearization(_) => "SingularLinearization",
        Error::MaxIters(_) => "MaxIters",
        Error::IncompatibleTopology(_) => "IncompatibleTopology",
        Error::ResidualTooLarge { .. } => "ResidualTooLarge",
        Error::FieldTooLarge(_) => "FieldTooLarge",
        Error::HypothesisUnmet(_) => "HypothesisUnmet",
        Error::EmptySubobject => "EmptySubobject",
        Error::RankTwoSecondFactor(_) => "RankTwoSecondFactor",
        Error::UnsupportedRank(_) => "UnsupportedRank",
        Error::InvalidParameter(_) => "InvalidParameter",
        Error::ArtifactMissing(_) => "ArtifactMissing",
        Error::ArtifactCorrupt(_) => "ArtifactCorrupt",
        Error::Io(_) => "Io",
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ThresholdViolated { .. }
            | Error::Diverged { .. }
            | Error::SingularLinearization(_)
            | Error::MaxIters(_)
            | Error::FieldTooLarge(_) => EXIT_DIVERGED,
            Error::ResidualTooLarge { .. }
            | Error::HypothesisUnmet(_)
            | Error::IncompatibleTopology(_)
            | Error::ArtifactMissing(_)
            | Error::ArtifactCorrupt(_) => EXIT_VERIFICATION,
            Error::Io(_) => EXIT_OTHER,
            _ => EXIT_CONFIG,
        };
        Self { code, kind: error_code(&e), message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
