use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("manifest row {row}: {message}")]
    ManifestRow { row: usize, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input (parameters, data, missing files)
    /// rather than a failure while running. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidDimensions(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch(_)
            | Error::LengthMismatch { .. }
            | Error::Degenerate(_)
            | Error::Empty(_)
            | Error::NonFinite(_)
            | Error::ManifestRow { .. }
            | Error::Manifest(_)
            | Error::ModelFormat(_)
            | Error::Image { .. }
            | Error::Json(_)
            | Error::Csv(_) => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Training(_) | Error::Fold { .. } => false,
        }
    }
}
