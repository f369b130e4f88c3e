use std::io;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sweep aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dims(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
