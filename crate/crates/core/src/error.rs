use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symmetry error: {0}")]
    Symmetry(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("basis error: {0}")]
    Basis(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("size limit: {0}")]
    TooLarge(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
