use thiserror::Error;

/// Errors surfaced by the criterion engines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("simulation failed at step {step}: {message}")]
    Simulation { step: usize, message: String },

    #[error("unsupported dimension {dim}: {context}")]
    UnsupportedDimension { dim: usize, context: String },

    #[error("spec error: {0}")]
    Spec(#[from] crate::spec::SpecError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True when the error is a spec/input problem rather than a numeric failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedDimension { .. }
                | Error::Spec(_)
        )
    }
}
