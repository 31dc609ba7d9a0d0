use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("system is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("boundary closure failed on face {face}: {reason}")]
    BoundaryClosure { face: String, reason: String },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("linear algebra: {0}")]
    Linalg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
