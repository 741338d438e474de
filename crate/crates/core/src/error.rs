use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for explicit sequence of length {len}")]
    OutOfRange { index: u64, len: usize },

    #[error("gauge undefined at r = {r}: {reason}")]
    Domain { r: f64, reason: String },

    #[error("tail start m = {0} was not recorded")]
    NotFound(u64),

    #[error("estimator unreliable: {0}")]
    Inconclusive(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
