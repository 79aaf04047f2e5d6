//! Command implementations behind the `fracflow` binary, split from
//! `main.rs` so integration tests can drive them directly.

pub mod commands;
pub mod config;
pub mod sweep;

use std::fmt;

/// CLI failure with its process exit code: 1 usage/validation, 2 I/O,
/// 3 numerical (non-finite flow).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fracflow_core::Error> for CliError {
    fn from(e: fracflow_core::Error) -> Self {
        use fracflow_core::Error::*;
        let msg = e.to_string();
        match e {
            Io { .. } | ImageFormat { .. } | BadMagic { .. } | TruncatedFlo { .. }
            | FloDimensions { .. } => CliError::Io(msg),
            NonFinite { .. } => CliError::Numeric(msg),
            _ => CliError::Usage(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
