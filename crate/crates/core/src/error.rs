use thiserror::Error;

/// Errors raised by the mode-space algebra, element factories and metrics.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {0}")]
    Index(String),
    #[error("operator and state live on different mode spaces")]
    SpaceMismatch,
    #[error("routing error: {0}")]
    Routing(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
