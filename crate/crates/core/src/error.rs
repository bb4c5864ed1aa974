use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("matrix is not positive definite: {0}")]
    Factorization(String),

    #[error("numerical routine failed after {iterations} iterations: {message}")]
    Numerical { iterations: usize, message: String },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("target {target} outside attainable range [{low}, {high}]")]
    Bracketing { target: f64, low: f64, high: f64 },

    #[error("unknown task id `{0}`")]
    UnknownTask(String),

    #[error("registry self-check failed for task `{task_id}`: {message}")]
    Registry { task_id: String, message: String },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
