use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("raw file holds {actual} bytes, expected {expected} for the requested shape")]
    SizeMismatch { expected: u64, actual: u64 },

    #[error("empty input")]
    Empty,

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("all points are identical; minimum interpoint distance is undefined")]
    AllIdentical,

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector has zero norm; cannot sample from it")]
    ZeroVector,

    #[error("all sampling weights are zero")]
    DegenerateWeights,

    #[error("rejection sampling exhausted its budget of {budget} trials")]
    SamplingExhausted { budget: u64 },

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("enumeration bound {bound:.3e} exceeds budget {budget}")]
    BudgetExceeded { bound: f64, budget: u64 },

    #[error("brute force caps exceeded: {0}")]
    CapsExceeded(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub(crate) fn in_round(self, round: usize) -> Self {
        Error::Round {
            round,
            source: Box::new(self),
        }
    }
}
