use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("one-vs-one mitigation needs at least two subgroups, found {found}")]
    TooFewSubgroups { found: usize },

    #[error("empty subset: {0}")]
    EmptySubset(String),

    #[error("unknown subgroup {0}")]
    UnknownSubgroup(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("training data contains a single class: {0}")]
    SingleClass(String),

    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("method {method} does not support criterion {criterion}")]
    IncompatibleMethod { method: String, criterion: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data { path: path.into(), message: message.into() }
    }

    /// True for failures caused by input files rather than by arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Data { .. } | Error::Csv(_) | Error::SingleClass(_))
    }
}
