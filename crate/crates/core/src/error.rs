use thiserror::Error;

/// Errors raised by the core algorithms and parsers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input text did not follow the accepted grammar.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A dataset, matrix or label vector violated a structural invariant.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Matrix shapes do not agree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// A required class has no members.
    #[error("class {0} has no members")]
    MissingClass(u8),

    /// A linear system could not be solved.
    #[error("singular system: {0}")]
    Singular(String),

    /// A metric is undefined for the given confusion matrix.
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_param(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        message: message.into(),
    }
}
