//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the library and the CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input: empty datasets, dimension mismatches caught at
    /// the API boundary, invalid sweep specifications.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input outside the mathematical domain of the operation
    /// (non-positive regularization, singular or indefinite matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two operands that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Config file rejected; `line` is 1-based.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// The Jacobi sweep budget was exhausted before the off-diagonal mass
    /// dropped below tolerance. Does not occur for finite symmetric input.
    #[error("eigendecomposition did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
