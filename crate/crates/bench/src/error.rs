use std::path::PathBuf;

/// Harness errors. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] gpfree_core::Error),
    #[error("{variant} repetition {rep}: {source}")]
    Run {
        variant: String,
        rep: usize,
        source: gpfree_core::Error,
    },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Data(_) => 3,
            BenchError::Run { .. } | BenchError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        BenchError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
