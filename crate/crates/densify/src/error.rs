use std::path::{Path, PathBuf};

use densify_core::pipeline::PipelineError;

use crate::config::ConfigLoadError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigLoadError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A file that exists but does not hold what it should.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit codes per error category.
pub mod exit {
    pub const CONFIG: u8 = 3;
    pub const IO: u8 = 4;
    pub const PIPELINE: u8 = 5;
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) | Error::Pipeline(PipelineError::Config(_)) => "config",
            Error::Io { .. } | Error::Format { .. } => "io",
            Error::Pipeline(_) => "pipeline",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.category() {
            "config" => exit::CONFIG,
            "io" => exit::IO,
            _ => exit::PIPELINE,
        }
    }
}

impl From<densify_core::ConfigError> for Error {
    fn from(e: densify_core::ConfigError) -> Self {
        Error::Config(ConfigLoadError::Invalid(e))
    }
}
