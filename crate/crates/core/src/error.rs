use thiserror::Error;

use crate::backends::BackendError;
use crate::oracle::OracleError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("statement is empty")]
    EmptyStatement,

    #[error("determinate premise set is empty")]
    EmptyDeterminateSet,

    #[error("exploration produced no usable proposition: {0}")]
    ExplorationFailed(String),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("schema error in record {index}: {message}")]
    Schema { index: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
