//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, solvers, and predictors.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input data (asymmetric matrix, probability out of range, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A size guard was exceeded (dense matrix over the configured limit).
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root-finding problem has no solution in the admissible range.
    /// Carries the boundary value of the objective for diagnostics.
    #[error("no solution: {reason} (boundary value {boundary})")]
    NoSolution { reason: String, boundary: f64 },

    /// Structurally invalid argument (dimension mismatch, empty input, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// Configuration file or CLI usage problem.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
