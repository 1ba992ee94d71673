use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped so that front ends can map them onto coarse exit
/// categories (input/config, numerical, I/O) via [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or invariant-violating input. `field` names the offender.
    #[error("{field}: {message}")]
    Format { field: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("qubit budget exceeded: {required} qubits requested, budget is {budget}")]
    Budget { required: usize, budget: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ill-conditioned metric: condition number {condition:.3e}, det(G) = {determinant:.3e}")]
    IllConditioned { condition: f64, determinant: f64 },

    #[error("curve has no interior minimum")]
    NoInteriorMinimum,
}

/// Coarse error classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    Numerical,
    Io,
}

impl Error {
    pub fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Format { .. } | Error::Dimension(_) | Error::Budget { .. } | Error::Invalid(_) => {
                ErrorCategory::Input
            }
            Error::Numerical(_) | Error::IllConditioned { .. } | Error::NoInteriorMinimum => {
                ErrorCategory::Numerical
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
