use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {value} lies outside [0, 1]")]
    Domain { value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible at J = {dimension}: {reason}")]
    Infeasible { dimension: usize, reason: String },

    #[error(
        "exact enumeration at J = {dimension} needs {terms:.3e} terms (cap {cap:.3e}); use Monte-Carlo mode"
    )]
    TooManyTerms { dimension: usize, terms: f64, cap: f64 },

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
