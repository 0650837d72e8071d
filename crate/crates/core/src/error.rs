use std::path::PathBuf;

use thiserror::Error;

use crate::data::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain indicator needs at least one source and one target sample")]
    MissingDomain,

    #[error("per-sample subproblem is not convex (ridge ladder exhausted at {ridge:e})")]
    NonConvexSubproblem { ridge: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("brute-force enumeration limited to K <= {max}, got K = {k}")]
    TooLarge { k: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no labeled samples to fit centroids")]
    NoLabeledSamples,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dataset failed validation: {0}")]
    Validation(ValidationReport),

    #[error("model version mismatch: {0}")]
    VersionMismatch(String),

    #[error("iteration {iteration}, sample {sample}: {source}")]
    Training {
        iteration: usize,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
