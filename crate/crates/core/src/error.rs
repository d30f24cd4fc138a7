use thiserror::Error;

/// Errors raised by the vocoder toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the range the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),
    /// Mismatched lengths or matrix dimensions.
    #[error("shape error: {0}")]
    Shape(String),
    /// The input carries no usable signal (all zeros, too short, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Training or estimation produced non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Malformed file contents.
    #[error("format error: {0}")]
    Format(String),
    /// Rejected configuration key or value.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
