use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] rmt_core::Error),
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("profile file {}: {message}", path.display())]
    ProfileFormat { path: PathBuf, message: String },
    #[error("empty spectral domain: {0}")]
    EmptyDomain(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    ThreadPool(String),
}

impl LabError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration problems exit with status 2, everything else with 1.
    pub fn is_config(&self) -> bool {
        matches!(self, LabError::Config { .. } | LabError::ConfigParse(_))
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
