use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QencError>;

#[derive(Debug, Error)]
pub enum QencError {
    /// Input data violates a precondition (non-finite value, non-binary bit, shape mismatch).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration or strategy/granularity combination is not allowed.
    #[error("configuration error: {0}")]
    Config(String),

    /// An embedding failed at a specific position of the input matrix.
    #[error("embedding failed at row {row}{}: {source}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Embedding {
        row: usize,
        column: Option<usize>,
        #[source]
        source: Box<QencError>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl QencError {
    /// True for errors caused by invalid user input or configuration, as
    /// opposed to runtime failures (I/O, numerics).
    pub fn is_validation(&self) -> bool {
        match self {
            QencError::Validation(_) | QencError::Config(_) => true,
            QencError::Embedding { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QencError::Io {
            path: path.into(),
            source,
        }
    }
}
