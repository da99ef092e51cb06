use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A stiffness matrix with a zero-energy (or negative-energy) mode.
    #[error("model singular: mode {mode} has eigenvalue {eigenvalue:e} (limit {limit:e}){detail}")]
    ModelSingular {
        mode: usize,
        eigenvalue: f64,
        limit: f64,
        detail: String,
    },

    #[error("model singular: {0}")]
    Factorization(String),

    #[error(
        "eigenvalues {first} and {second} are coincident; the vector accuracy index is undefined, \
         use the extended index over modes 1..={second}"
    )]
    Degenerate { first: usize, second: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {pointer}: {message}")]
    Schema {
        path: PathBuf,
        pointer: String,
        message: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics (singular or indefinite models)
    /// rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ModelSingular { .. } | Error::Factorization(_) | Error::Degenerate { .. }
        )
    }
}
