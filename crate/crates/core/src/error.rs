use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by all modules of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed header, CSV, or JSON content in a named file.
    #[error("malformed {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Header-declared payload length disagrees with the file on disk.
    #[error("payload size mismatch in {path}: expected {expected} bytes, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },

    /// Two grid objects that must share dims/spacing do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A precondition on an argument was violated (empty mask, bad config, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The data admits no answer (all-censored cohort, identical risks, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
