use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid unit cell: {0}")]
    InvalidCell(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pixel ({slow}, {fast}) out of bounds for a {slow_pixels}x{fast_pixels} panel")]
    OutOfBounds {
        slow: usize,
        fast: usize,
        slow_pixels: usize,
        fast_pixels: usize,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("{kernel}: non-finite value at pixel {index} (slow {slow}, fast {fast})")]
    NumericalFault {
        kernel: String,
        index: usize,
        slow: usize,
        fast: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: CRC-32 mismatch (sidecar {expected:08x}, payload {actual:08x})")]
    Crc {
        path: PathBuf,
        expected: u32,
        actual: u32,
    },

    #[error("report: {0}")]
    Report(String),

    #[error("image {index}: {source}")]
    Image {
        index: u64,
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

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// The innermost error, looking through per-image wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Image { source, .. } => source.root(),
            other => other,
        }
    }
}
