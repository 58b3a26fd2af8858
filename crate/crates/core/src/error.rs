use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("signal not detectable: {0}")]
    NotDetectable(String),
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's configuration rather than input data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
