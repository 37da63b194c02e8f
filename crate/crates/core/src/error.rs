use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not positive semi-definite: smallest eigenvalue {min_eigenvalue:e} is below the floor {floor:e}")]
    NotPsd { min_eigenvalue: f64, floor: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The data cannot support the requested statistic (constant series, zero spread).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("quadrature oracle not resolved: {0}")]
    OracleResolution(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the failure comes from user configuration rather than data or numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
