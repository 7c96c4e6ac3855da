//! Crate-wide error type.

use std::fmt;

/// Errors produced by configuration validation, dataset handling and file I/O.
#[derive(Debug)]
pub enum Error {
    /// A configuration value violates its contract (dimensions, ranges, ...).
    InvalidConfig(String),
    /// An input value violates an operation's precondition.
    InvalidInput(String),
    /// A file could not be read or written.
    Io(std::io::Error),
    /// A file or config could not be parsed.
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
