use thiserror::Error;

pub type Result<T, E = QkdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QkdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probe dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("operation would exceed the {max}-photon truncation")]
    TruncationExceeded { max: u8 },

    /// An estimator had nothing to estimate from.
    #[error("no data: {0}")]
    NoData(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QkdError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        QkdError::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        QkdError::Config(msg.into())
    }
}
