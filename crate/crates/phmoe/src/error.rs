//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, evaluation, and fitting.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine failed (singular system, divergence, overflow).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An observation carries (numerically) zero probability under the
    /// current parameters, so conditional expectations are undefined.
    #[error("degenerate observation at row {index}: {detail}")]
    DegenerateObservation { index: usize, detail: String },

    /// Covariate data did not match the declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// The requested conditional mean does not exist.
    #[error("infinite mean: {0}")]
    InfiniteMean(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
