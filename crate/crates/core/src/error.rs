//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Array/tensor shapes do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numeric invariant was violated (non-finite value, non-positive
    /// variance, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Training produced a non-finite loss.
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    /// Run configuration is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// An I/O operation failed; the path gives context.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file had unexpected contents.
    #[error("parse error in {}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), msg: msg.into() }
    }
}
