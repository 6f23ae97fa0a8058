//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration rejected; `key` names the offending field.
    #[error("invalid config value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    /// A closed-form quantity has no finite value at the given parameters
    /// (e.g. the two-body jam escape time at zero noise).
    #[error("{0} diverges at these parameters")]
    Divergent(&'static str),

    #[error("root solver failed: {0}")]
    SolverFailure(String),

    /// The optimizer scan had no feasible team size.
    #[error("no feasible optimum: critical noise undefined over the whole range")]
    NoOptimum,

    #[error("planning failed: {0}")]
    PlanFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
