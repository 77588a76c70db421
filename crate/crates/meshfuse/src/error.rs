//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by scenario handling, simulation, training and reporting.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad node counts, missing bundle, …).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A required CSV column is absent or the header does not match.
    #[error("schema error: {0}")]
    Schema(String),

    /// A data row failed validation; `row` is the 1-based data-row index.
    #[error("validation error at row {row}: {message}")]
    Row { row: usize, message: String },

    /// Inputs are structurally fine but unusable (empty dataset,
    /// single-class labels, zero messages, …).
    #[error("data error: {0}")]
    Data(String),

    /// Two inputs that must describe the same scenarios or shapes do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// A device id that does not exist in the scenario.
    #[error("unknown device id {0}")]
    UnknownDevice(u32),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
