use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DcplError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unstable process {process}: {detail}")]
    Unstable { process: String, detail: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<DcplError>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DcplError>;

impl DcplError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        DcplError::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DcplError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a human readable location such as `"epoch 3, stage 2"`.
    pub fn context(self, context: impl Into<String>) -> Self {
        DcplError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
