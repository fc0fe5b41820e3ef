use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_IO: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Load { path: PathBuf, source: sensalign::Error },

    #[error(transparent)]
    Core(#[from] sensalign::Error),

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },

    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn load(path: impl Into<PathBuf>) -> impl FnOnce(sensalign::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Load { path, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Load { source, .. } | CliError::Core(source) if source.is_io() => EXIT_IO,
            CliError::Write { .. } | CliError::Read { .. } => EXIT_IO,
            _ => EXIT_INVALID,
        }
    }

    /// The JSON object printed on stdout when a command fails.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = if self.exit_code() == EXIT_IO { "io" } else { "validation" };
        serde_json::json!({
            "error": self.to_string(),
            "kind": kind,
            "exit_code": self.exit_code(),
        })
    }
}
