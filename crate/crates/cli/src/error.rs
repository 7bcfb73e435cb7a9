use std::path::PathBuf;

use thiserror::Error;
use vsm_actr::features::FeatureError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("engine: {0}")]
    Engine(String),
    #[error("missing upstream artifact {0} (run the earlier stage first)")]
    Missing(PathBuf),
    #[error("embedding provider: {0}")]
    Provider(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Engine(_) => 3,
            CliError::Missing(_) => 4,
            CliError::Provider(_) => 5,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }

    pub fn other(e: impl std::fmt::Display) -> Self {
        CliError::Other(e.to_string())
    }

    /// Provider failures get their own exit code; anything else is generic.
    pub fn from_feature(e: FeatureError) -> Self {
        match e {
            FeatureError::ProviderUnavailable(_)
            | FeatureError::ProviderError(_)
            | FeatureError::Protocol(_)
            | FeatureError::DimensionMismatch { .. } => CliError::Provider(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
