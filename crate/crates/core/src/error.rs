use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the divisor laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("value {value} is outside the table range [1, {limit}]")]
    OutOfRange { value: f64, limit: u64 },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("corrupt table file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
