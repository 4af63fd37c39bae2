use thiserror::Error;

use thzra_core::analytics::AnalyticsError;
use thzra_core::validation::ValidationError;
use thzra_core::{ChannelError, ConfigError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit code: 2 for anything wrong with the inputs, 3 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) | CliError::Analytics(_) | CliError::Channel(_) => 2,
            CliError::Validation(ValidationError::Option { .. }) => 2,
            _ => 3,
        }
    }
}
