use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unknown source `{0}`")]
    UnknownSource(String),

    #[error("source `{source_id}`, fold {fold}: no training observations for action {action}")]
    EmptyCell {
        source_id: String,
        action: usize,
        fold: usize,
    },

    #[error("non-finite value at source `{source_id}`, row {row}, action {action}")]
    NonFinite {
        source_id: String,
        row: usize,
        action: usize,
    },

    #[error("enumeration budget exceeded: {required} policies needed, budget {budget}; use a smaller instance")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
