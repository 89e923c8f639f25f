use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parity mismatch: lambda={lambda} is not in 2N+{d}")]
    Parity { lambda: i64, d: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point pair outside the admissible region: {0}")]
    Region(String),
    #[error("singular time t={t} (distance {distance:.3e} to the singular set)")]
    Singularity { t: f64, distance: f64 },
    #[error("quadrature did not converge: last={last:e}, previous={previous:e}")]
    NonConvergence { last: f64, previous: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
