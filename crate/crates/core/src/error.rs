//! Crate-wide error type. The CLI maps variants onto process exit codes, so
//! the split between input, compatibility, and numeric failures matters.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    /// Artifacts that parse but cannot be used together (vocab/model dims,
    /// wrong checkpoint kind, mismatched document sets).
    #[error("incompatible artifacts: {0}")]
    Incompatible(String),
    /// Non-finite values where finite ones are required (NaN loss aborts).
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
