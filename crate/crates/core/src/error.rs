use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error at row {row}: expected {expected} features, found {found}")]
    Schema {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("feature dimensionality changed from {expected} to {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("value {0} outside the unit interval")]
    OutOfUnitInterval(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("instance {index} carries no label")]
    Unlabeled { index: u64 },

    #[error("evaluation window is empty")]
    EmptyWindow,

    #[error("ensemble has no members")]
    EmptyEnsemble,

    #[error("unknown {kind} `{value}`")]
    UnknownVariant { kind: &'static str, value: String },

    #[error("model failure: {0}")]
    Model(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
