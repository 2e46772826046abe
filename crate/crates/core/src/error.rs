use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the pipeline. Non-fatal problems travel as
/// [`crate::ingest::Diagnostic`]s or warnings instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("undefined range for signal {0}: no present hourly values and no overrides")]
    UndefinedRange(String),

    #[error("range error: vmin ({vmin}) must be below vmax ({vmax})")]
    Range { vmin: f64, vmax: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Stream(_) => "io",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::UndefinedRange(_) => "undefined_range",
            Error::Range { .. } => "range",
            Error::Precondition(_) => "precondition",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
