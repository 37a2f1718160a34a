use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation was called on an argument that violates its contract,
    /// e.g. eliminating a critical column.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("enumeration of {count} matrices exceeds the cap of {cap}")]
    ResourceCap { count: u128, cap: u128 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("exponent estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
