use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid covariance parameters: {0}")]
    InvalidParams(String),
    #[error("duplicate locations at indices {0} and {1}")]
    DuplicateLocations(usize, usize),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("tile size {nb} does not divide matrix order {n}")]
    TileSizeMismatch { n: usize, nb: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dataset I/O: {0}")]
    Io(String),
}

pub type Result<T, E = GeoError> = std::result::Result<T, E>;
