use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("wave function is not normalized (norm = {norm:.3e})")]
    NotNormalized { norm: f64 },
    #[error("wave function vanishes everywhere")]
    ZeroField,
    #[error("phase gradient is not integrable: {0}")]
    Vortex(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model time-scale hierarchy violated: {0}")]
    Hierarchy(String),
    #[error("numerical instability: {0}")]
    Unstable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("interacting potential rejected: {0}")]
    Interacting(String),
    #[error("seed mismatch: {0}")]
    SeedMismatch(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate statistic: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
