use std::path::Path;

use grushin::GrushinError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("[{module}] {source}")]
    Module {
        module: &'static str,
        #[source]
        source: GrushinError,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Tags a core error with the module that raised it.
pub trait Tag<T> {
    fn tag(self, module: &'static str) -> Result<T, CliError>;
}

impl<T> Tag<T> for grushin::Result<T> {
    fn tag(self, module: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Module { module, source })
    }
}
