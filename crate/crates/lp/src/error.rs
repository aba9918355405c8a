use thiserror::Error;

/// Errors raised by model construction, solving and file I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = LpError> = std::result::Result<T, E>;
