//! Error type shared across the workspace.
//!
//! Errors carry a coarse category so front-ends can map them to distinct
//! process exit codes: configuration mistakes (bad shapes, bad arguments),
//! capacity refusals (an operation would densify something too large), and
//! I/O or file-format failures.

use thiserror::Error;

/// Coarse failure class, used by the CLI to select an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Capacity,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes, ranks, or arguments.
    #[error("config error: {0}")]
    Config(String),

    /// A dense intermediate would exceed the capacity guard.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or unsupported file contents.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Capacity(_) => ErrorCategory::Capacity,
            Error::Io(_) | Error::Format(_) => ErrorCategory::Io,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
