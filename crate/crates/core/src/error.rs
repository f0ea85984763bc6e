//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by loading, parsing, and pipeline operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Invalid configuration or unusable input combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation's contract (e.g. out-of-range index,
    /// identifier missing from a model).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A table was rejected for interpretation (not a hard failure; batch
    /// drivers log and skip these).
    #[error("table rejected: {0}")]
    TableRejected(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
