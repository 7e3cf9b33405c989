//! Library surface of the `cbs` binary, exposed so integration tests can
//! drive scenarios in-process.

pub mod config;
pub mod scenario;

use std::fmt;

/// Failure categories, each with a stable process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 1).
    Validation(String),
    /// Filesystem trouble (exit 2).
    Io(String),
    /// A numerical routine failed to converge or produced garbage (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cbs_core::Error> for CliError {
    fn from(e: cbs_core::Error) -> Self {
        match e {
            cbs_core::Error::Io(io) => CliError::Io(io.to_string()),
            cbs_core::Error::Numerical(m) => CliError::Numerical(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Environment variable consulted for the default output directory when
/// neither the command line nor the scenario file names one.
pub const OUT_DIR_ENV: &str = "CBS_OUT_DIR";
