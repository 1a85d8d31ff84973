//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Structural defect in a linear program, distinct from infeasibility.
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    /// An operation required a verified metric (triangle inequality) but the
    /// space was not marked as one.
    #[error("operation requires a verified metric: {0}")]
    MetricNotVerified(&'static str),

    /// The restricted Earthmover program could not meet the requested parity
    /// slack; carries the smallest slack that would have been feasible.
    #[error("parity constraint infeasible: minimal achievable slack is {min_eps}")]
    InfeasibleParity { min_eps: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
