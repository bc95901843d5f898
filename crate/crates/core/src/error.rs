use std::path::PathBuf;

use thiserror::Error;

use crate::color::ColorSpaceTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected:?} image, got {actual:?}")]
    TagMismatch {
        expected: ColorSpaceTag,
        actual: ColorSpaceTag,
    },

    #[error("dimension mismatch: {left_h}x{left_w} vs {right_h}x{right_w}")]
    DimensionMismatch {
        left_h: usize,
        left_w: usize,
        right_h: usize,
        right_w: usize,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("cube parse error at line {line}: {message}")]
    Cube { line: usize, message: String },

    #[error("manifest validation failed:\n{}", .0.join("\n"))]
    Manifest(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("image too small: {height}x{width}, need short side >= {required}")]
    ImageTooSmall {
        height: usize,
        width: usize,
        required: usize,
    },

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },

    #[error("missing target for expert '{expert}' on photo {id}")]
    MissingTarget { expert: char, id: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dims(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_h: left.0,
            left_w: left.1,
            right_h: right.0,
            right_w: right.1,
        }
    }
}
