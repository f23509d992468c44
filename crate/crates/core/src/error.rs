use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// The data itself is unusable (non-finite values, wrong shapes).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A caller-supplied argument or configuration violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A computation produced a non-finite intermediate.
    #[error("numerical failure at index {index}: {message}")]
    Numerical { index: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidData(msg.into())
    }
}
