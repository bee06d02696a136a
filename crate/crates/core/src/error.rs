use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed data: dimension mismatches, inconsistent inputs.
    /// Distinct from a verification *failure*, which is a valid result.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("ring mismatch: {0}")]
    RingMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
