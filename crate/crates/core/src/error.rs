use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    Singular(String),

    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("refusing exhaustive enumeration of {n} elements (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate update: {0}")]
    Degenerate(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
