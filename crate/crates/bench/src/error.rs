use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Solver(#[from] fbtn::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn config_error(key: impl Into<String>, reason: impl Into<String>) -> BenchError {
    BenchError::Config { key: key.into(), reason: reason.into() }
}
