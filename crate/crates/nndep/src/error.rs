//! Crate-wide error type.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors the toolkit can produce.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; reports file, line (1-based, 0 when unknown) and what went wrong.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Shapes that do not line up (layer dims, vector lengths, pattern widths).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A parameter outside its documented range, or an unknown name.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Semantically invalid data (empty sets, duplicate ids, out-of-range labels).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}{}", iteration.map(|i| format!(" (prune iteration {i})")).unwrap_or_default())]
    Diverged {
        epoch: usize,
        iteration: Option<usize>,
    },

    /// A class label with no records behind it.
    #[error("class {0} has no records")]
    EmptyClass(String),

    /// Exact integer counting would exceed the native width.
    #[error("count overflow: {0}")]
    Overflow(String),

    /// Wrong magic, version, or otherwise unreadable binary/image format.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
