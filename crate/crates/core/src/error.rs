use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("offset {offset} is outside the profile radius {radius}")]
    OutOfRange { offset: i64, radius: usize },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("unsupported direction: {0}")]
    UnsupportedDirection(String),

    #[error("unknown preset `{0}`")]
    NotFound(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("optimisation diverged at epoch {epoch}: loss {loss:e} exceeds {limit:e}")]
    Divergence { epoch: usize, loss: f64, limit: f64 },

    #[error("{path}: byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
