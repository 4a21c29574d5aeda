use thiserror::Error;

/// Errors raised by estimators, density constructions and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite evaluation {value} at theta = {at:?}")]
    NonFiniteEvaluation { at: Vec<f64>, value: f64 },

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("negative density value {value} at theta = {at}")]
    NegativeDensity { at: f64, value: f64 },

    #[error("proposal density is zero at a drawn point theta = {at:?}")]
    SupportViolation { at: Vec<f64> },

    #[error("all importance weights are zero")]
    AllWeightsZero,

    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    #[error("missing capability: {0}")]
    CapabilityError(String),

    #[error("invalid optimal-proposal spec: missing {0}")]
    SpecError(String),

    #[error("negative noisy realization {value} at theta = {at:?}")]
    NegativeRealization { at: Vec<f64>, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
