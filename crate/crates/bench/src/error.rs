use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad config file or command-line value.
    #[error("config error: {0}")]
    Config(String),

    /// Unreadable, malformed or unverifiable data.
    #[error("data error: {0}")]
    Data(String),

    #[error("runtime error: {0}")]
    Runtime(String),
}

impl BenchError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Data(_) => 2,
            BenchError::Runtime(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub fn io_error(what: &std::path::Path, err: std::io::Error) -> BenchError {
    BenchError::Runtime(format!("{}: {err}", what.display()))
}
