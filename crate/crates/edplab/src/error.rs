//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or out-of-range request.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented resource cap (memory, element count, horizon) would be
    /// exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A multiplicative-function spec is missing the value needed to
    /// evaluate at some prime power.
    #[error("spec '{label}' has no value for prime power {key}")]
    MissingValue { label: String, key: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
