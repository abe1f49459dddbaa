use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rfk_core::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use rfk_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Image(_) => EXIT_IO,
                E::Config(_) => EXIT_CONFIG,
                _ => EXIT_VALIDATION,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parameter errors raised while building a run configuration are config errors.
pub(crate) fn as_config(e: rfk_core::Error) -> CliError {
    CliError::Config(e.to_string())
}
