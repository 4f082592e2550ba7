use std::path::{Path, PathBuf};

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] ppcomp_core::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
