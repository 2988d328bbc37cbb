use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty example subset")]
    EmptySubset,

    #[error("linear solve failed: {reason} (condition estimate {condition:.3e})")]
    Numerical { reason: String, condition: f64 },

    #[error("{count} subsets exceeds the enumeration limit of {limit}")]
    CombinatorialExplosion { count: u128, limit: u128 },

    #[error("dataset of {examples} examples cannot be split evenly across {workers} workers")]
    UnevenShards { examples: usize, workers: usize },

    #[error("starvation: only {responded} of the required {required} workers responded")]
    Starvation { responded: usize, required: usize },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trace too short: {0} records, need at least 2")]
    TraceTooShort(usize),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Strips any iteration context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }
}
