use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature or step control could not reach the requested
    /// tolerance. `best_estimate` is the value obtained before giving up.
    #[error("accuracy not reached: {what} (best estimate {best_estimate:e}, error estimate {error_estimate:e})")]
    Accuracy {
        what: String,
        best_estimate: f64,
        error_estimate: f64,
    },

    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
