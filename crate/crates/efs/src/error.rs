use std::io;
use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{stage} [{context}]: {source}")]
    Stage {
        stage: &'static str,
        context: String,
        source: efs_core::Error,
    },
}

impl Error {
    /// 2 for configuration problems, 3 for bad or unreadable data,
    /// 4 when an SVM made no progress at all.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Format { .. } | Error::Io { .. } => 3,
            Error::Stage { source, .. } => match source {
                efs_core::Error::NoConvergence { .. } => 4,
                _ => 3,
            },
        }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Attaches a stage name and context to core errors.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str, context: impl Into<String>) -> Result<T>;
}

impl<T> StageExt<T> for efs_core::Result<T> {
    fn stage(self, stage: &'static str, context: impl Into<String>) -> Result<T> {
        self.map_err(|source| Error::Stage {
            stage,
            context: context.into(),
            source,
        })
    }
}
