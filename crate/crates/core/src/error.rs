use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum QldpError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// The requested entropy level lies in the wrong phase for the operation,
    /// e.g. asking for Gibbs weights while the entropy constraint is inactive.
    #[error("entropy level {s} is not above the regime threshold {threshold}")]
    Regime { s: f64, threshold: f64 },

    #[error("entropy level {s} is infeasible (maximum {max})")]
    Infeasible { s: f64, max: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QldpError>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(QldpError::DimensionMismatch { expected, actual })
    }
}
