//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GkError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A textual literal could not be parsed.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    /// An internal identity that must hold was violated.
    #[error("internal consistency error: {0}")]
    Consistency(String),
    /// A configuration is inconsistent with the method constraints.
    #[error("configuration error: {0}")]
    Config(String),
    /// A brute-force search did not stabilize within its height schedule.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, GkError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GkError::Domain(msg.into()))
}
