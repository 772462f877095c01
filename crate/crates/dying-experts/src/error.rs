//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: dimensions disagree, losses out of range, death
    /// rounds outside `[1, T-1]`, empty alive set, and the like.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The caller broke a protocol contract (e.g. killed an expert out of
    /// the declared dying order, or asked the last alive expert to die).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An enumeration would exceed the configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Text-format parse failure, with a line number when available.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
