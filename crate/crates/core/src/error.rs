use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A window/plane/regime combination the library does not support.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
