use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cocycle matrix is not unipotent (deviation {deviation:e})")]
    NotUnipotent { deviation: f64 },

    #[error("quadrature did not reach tolerance {tol:e}: estimate {estimate}, error {error:e}")]
    QuadratureNotConverged { estimate: f64, error: f64, tol: f64 },

    #[error("continued fraction expansion too short: need t_k beyond {needed}, have {available}")]
    InsufficientDepth { needed: f64, available: f64 },

    #[error("malformed cache file: {0}")]
    Cache(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
