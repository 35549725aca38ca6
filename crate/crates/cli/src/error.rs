use std::path::{Path, PathBuf};

use flowkernel::FlowError;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config does not parse: {0}")]
    Parse(String),

    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    InvalidConfig(Vec<ConfigError>),

    #[error(transparent)]
    Flow(#[from] FlowError),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("writing {0}: {1}")]
    Output(String, String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
