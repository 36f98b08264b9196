use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] spgm_core::Error),
    #[error("I/O error on {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("selftest failed: {0}")]
    SelfTest(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// Process exit code: 2 configuration, 3 numeric regime, 4 I/O,
    /// 1 failed selftest.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(e) if e.is_regime() => 3,
            CliError::Numeric(_) => 2,
            CliError::Io { .. } => 4,
            CliError::SelfTest(_) => 1,
        }
    }
}
