use thiserror::Error;

/// Errors raised by the simulation and certificate machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("modulus bounded: {0}")]
    ModulusBounded(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
