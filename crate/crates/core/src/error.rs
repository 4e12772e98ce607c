use thiserror::Error;

/// Errors produced by model validation, simulation and witness extraction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("invalid measurement design: {0}")]
    InvalidDesign(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("ill-conditioned design: {0}")]
    IllConditioned(String),

    #[error("inconsistent rates: {0}")]
    Inconsistent(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
