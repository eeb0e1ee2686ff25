use thiserror::Error;

/// Errors produced by graph loading, product-graph construction, spectral
/// encodings and the attention model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("scale error: {size} product nodes exceeds the limit of {limit}")]
    Scale { size: usize, limit: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("sampling mask selects no subgraphs")]
    EmptySample,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end: 2 for bad
    /// input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::InvalidPermutation(_)
            | Error::Scale { .. }
            | Error::InvalidInput(_)
            | Error::Range(_)
            | Error::EmptySample
            | Error::ShapeMismatch(_)
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
