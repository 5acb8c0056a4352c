use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("reduction needs a trivial bundle, got degree {0}")]
    NontrivialDegree(i32),
    #[error("reduction needs a flat metric (unit conformal factor)")]
    NonFlatMetric,
    #[error("no clear spectral gap: {0}")]
    AmbiguousGap(String),
    #[error("solver diverged: {0}")]
    Divergence(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
