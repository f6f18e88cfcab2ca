use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("observation {0} is not out-of-bag for any replicate")]
    NotCovered(usize),

    #[error("estimate undefined: {0}")]
    EstimateUndefined(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("node {0} is not a leaf")]
    NotALeaf(usize),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("record key mismatch: {0}")]
    KeyMismatch(String),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
