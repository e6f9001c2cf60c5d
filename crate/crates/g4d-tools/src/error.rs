use std::path::PathBuf;

use g4d_core::CoreError;
use thiserror::Error;

/// Tooling errors, classified for the CLI exit codes: config 2, I/O 3,
/// validation 4.
#[derive(Debug, Error)]
pub enum ToolsError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl ToolsError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ToolsError::Io { path: path.into(), source }
    }

    pub fn format(offset: usize, reason: impl Into<String>) -> Self {
        ToolsError::Format { offset, reason: reason.into() }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolsError::Config(_) => 2,
            ToolsError::Io { .. } => 3,
            ToolsError::Format { .. } | ToolsError::Core(_) => 4,
        }
    }
}
