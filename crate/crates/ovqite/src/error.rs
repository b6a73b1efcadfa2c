//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by simulator operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operands act on different qubit counts, or an index is out of range.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input violates a documented precondition (non-Hermitian sum, bad phase, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// Request exceeds what the dense desk-scale backends support.
    #[error("capability exceeded: {0}")]
    Capability(String),

    /// A linear solve or likelihood maximization failed.
    #[error("solver failure: {0}")]
    Solver(String),

    /// An expectation-value lookup required a string that was never estimated.
    #[error("incomplete estimates: missing {0}")]
    IncompleteEstimates(String),
}

pub type Result<T> = std::result::Result<T, Error>;
