use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum FgaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration cap exceeded: {actual} assignments > cap {cap}")]
    EnumerationCapExceeded { actual: u128, cap: u128 },

    #[error("qubit count {q} exceeds maximum {max}")]
    TooManyQubits { q: usize, max: usize },

    #[error("malformed instance file: {0}")]
    MalformedInstance(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

pub type Result<T> = std::result::Result<T, FgaError>;
