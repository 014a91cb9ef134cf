use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiberError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies within the pole tolerance of the spherical chart (angle index {index}, sin = {sin:e})")]
    PoleSingularity { index: usize, sin: f64 },

    #[error("state left the spherical chart at step {step} (angle index {index})")]
    ChartExit { step: usize, index: usize },

    #[error("test function lacks {0} and finite differences are disabled")]
    MissingDerivatives(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exp(-phi) does not appear integrable: {0}")]
    NonIntegrable(String),

    #[error("step {step} produced a non-finite state")]
    StepFailure { step: usize },

    #[error("insufficient signal for a decay fit: {usable} usable points (need {required})")]
    InsufficientSignal { usable: usize, required: usize },

    #[error("Galerkin basis too small: {0}")]
    BasisTooSmall(String),
}

pub type Result<T, E = FiberError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FiberError {
    FiberError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
