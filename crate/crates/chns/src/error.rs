use std::io;
use std::path::PathBuf;

use chns_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 positivity, 3 solver failure, 4 configuration, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(CoreError::Positivity { .. }) => 2,
            AppError::Core(CoreError::Breakdown { .. } | CoreError::NotConverged { .. } | CoreError::NonFinite(_)) => 3,
            AppError::Core(CoreError::Config(_)) | AppError::Config(_) => 4,
            AppError::Core(CoreError::Shape { .. } | CoreError::ZeroDiagonal(_)) => 3,
            AppError::Io { .. } => 1,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
