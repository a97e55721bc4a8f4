use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("cannot parse config: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<CliError>,
    },

    #[error(transparent)]
    Core(#[from] grusin_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot encode report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        CliError::InFile {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }

    /// Config and usage problems, as opposed to failures while running.
    pub fn is_usage(&self) -> bool {
        match self {
            CliError::Invalid { .. } | CliError::Parse(_) => true,
            CliError::Core(e) => matches!(e, grusin_core::Error::InvalidParameter { .. }),
            CliError::InFile { source, .. } => source.is_usage(),
            CliError::Io { .. } | CliError::Json(_) => false,
        }
    }
}
