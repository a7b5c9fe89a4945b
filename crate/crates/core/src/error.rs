use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("missing column {expected} (found {found:?})")]
    MissingColumn { expected: String, found: Option<String> },

    #[error("cannot parse {value:?} at row {row}, column {column}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unknown level {level} at row {row} (column {column})")]
    UnknownLevel {
        level: String,
        row: usize,
        column: String,
    },

    #[error("zero variance in column {0}")]
    ZeroVariance(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
