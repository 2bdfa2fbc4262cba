use std::io;

use evpriv_core::split::ErrorCode;

/// Failure categories of the command line, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Protocol(String),
    /// An ERROR frame from the provider.
    #[error("provider error {code:?}: {message}")]
    Remote { code: ErrorCode, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Format(_) => 3,
            Error::Runtime(_) => 4,
            Error::Protocol(_) | Error::Remote { .. } => 5,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Format(_) => "format",
            Error::Runtime(_) => "runtime",
            Error::Protocol(_) | Error::Remote { .. } => "protocol",
        }
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl From<evpriv_core::Error> for Error {
    fn from(e: evpriv_core::Error) -> Self {
        match e {
            evpriv_core::Error::Frame(_) => Error::Protocol(e.to_string()),
            _ => Error::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Runtime(format!("I/O: {e}"))
    }
}
