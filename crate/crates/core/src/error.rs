use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: control label is not one-hot")]
    InvalidControl { line: usize },

    #[error("line {line}: coordinate {value} outside [-1, 1]")]
    OutOfRange { line: usize, value: f64 },

    #[error("bad termination: {0}")]
    BadTermination(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("stroke boundary mismatch at point {index}")]
    StrokeBoundaryMismatch { index: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("batch mismatch: {img} image features vs {seq} sequence features")]
    BatchMismatch { img: usize, seq: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("density below floor at step {step}")]
    ZeroDensity { step: usize },

    #[error("vector norm too small to normalize")]
    ZeroVector,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
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

    pub(crate) fn in_file(path: impl Into<PathBuf>, source: Error) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(source),
        }
    }
}
