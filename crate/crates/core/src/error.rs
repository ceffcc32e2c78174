use thiserror::Error;

/// Errors raised by the estimators, selectors and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Observations outside the open unit interval under the reject policy.
    #[error("{count} observation(s) outside (0,1) at indices {indices:?}")]
    OutOfUnitInterval { count: usize, indices: Vec<usize> },

    /// Input data too small or too degenerate for the requested operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical procedure failed (non-finite values, non-convergence, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A test density lacks a derivative or feature required by a formula.
    #[error("capability error: {0}")]
    Capability(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
