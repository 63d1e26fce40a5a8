use std::path::PathBuf;

use thiserror::Error;

/// Everything a command can fail with. Each variant maps to its own exit
/// status via [`CliError::exit_code`].
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("invalid config {}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] platoon_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{failed} of {total} sweep points failed, see the index")]
    PartialSweep { failed: usize, total: usize },
}

pub mod exit {
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const MISSING_FILE: u8 = 3;
    pub const SCHEMA: u8 = 4;
    pub const VALIDATION: u8 = 5;
    pub const COLLISION: u8 = 6;
    pub const NUMERIC: u8 = 7;
    pub const PARTIAL_SWEEP: u8 = 8;
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use platoon_core::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::MissingFile(_) => exit::MISSING_FILE,
            CliError::Schema { .. } => exit::SCHEMA,
            CliError::Core(E::Collision { .. }) => exit::COLLISION,
            CliError::Core(E::NonFinite { .. } | E::EigenSolver { .. }) => exit::NUMERIC,
            CliError::Core(_) => exit::VALIDATION,
            CliError::Io { .. } => exit::IO,
            CliError::PartialSweep { .. } => exit::PARTIAL_SWEEP,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
