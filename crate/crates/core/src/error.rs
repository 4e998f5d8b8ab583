use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the metric pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported image format: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("high-pass cutoff {cutoff} too large for {width}x{height} plane")]
    Highpass {
        cutoff: usize,
        width: usize,
        height: usize,
    },

    #[error("image {width}x{height} smaller than {window}x{window} window")]
    Size {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("planes are identical (MSE = 0)")]
    Identical,

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error at '{pointer}': {message}")]
    Schema { pointer: String, message: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (last change {last_delta:e})")]
    Convergence { iterations: usize, last_delta: f64 },

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("validation failed at row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("feature '{feature}': {source}")]
    Feature {
        feature: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: &std::path::Path, e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Self::io(path, io),
            other => Self::io(path, std::io::Error::other(format!("{other:?}"))),
        }
    }

    pub(crate) fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// Strips feature annotations to reach the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Feature { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
