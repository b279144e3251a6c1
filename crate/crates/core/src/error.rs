use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("lp solver: {0}")]
    Lp(String),
    #[error("instance too large for the oracle: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
