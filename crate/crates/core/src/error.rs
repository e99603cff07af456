//! Error taxonomy shared by all modules.
//!
//! Four broad classes keep the CLI exit-code mapping simple: domain errors
//! (invalid mathematical input), resource errors (configured safety caps),
//! numeric errors (consistency or convergence failures detected at run
//! time), and I/O errors.

use thiserror::Error;

/// Unified error type for the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured safety cap would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A runtime consistency or convergence check failed.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV encoding or decoding failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// JSON encoding or decoding failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Convenience constructor for domain errors.
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Convenience constructor for resource errors.
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    /// Convenience constructor for numeric errors.
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
