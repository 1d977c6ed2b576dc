use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter bundle violates its invariants.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A function evaluation produced a non-finite value where a finite one was required.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// Expression text could not be parsed.
    #[error("parse error at position {position}: {message} (expected {expected})")]
    Parse {
        position: usize,
        message: String,
        expected: String,
    },
    /// The underlying optimization kernel failed.
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
