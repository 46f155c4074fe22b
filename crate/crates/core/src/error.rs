use thiserror::Error;

/// Errors raised by the solvers and diagnostics in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    Unstable { dt: f64, limit: f64 },

    #[error("diffusion matrix is not positive definite at {point:?}")]
    Indefinite { point: [f64; 3] },

    #[error("under-resolved: {0}")]
    Underresolved(String),

    #[error("kernel mass {achieved} misses unit mass by more than {tolerance:e}")]
    KernelMass { achieved: f64, tolerance: f64 },

    #[error("free boundary left the domain: {0}")]
    FrontExit(String),

    #[error("malformed field file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
