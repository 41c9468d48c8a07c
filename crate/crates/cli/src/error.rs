use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

/// Process exit status for a failed configuration.
pub const EXIT_CONFIG: u8 = 2;
/// Process exit status for a numerical or convergence failure.
pub const EXIT_NUMERIC: u8 = 3;
/// Process exit status for file-system failures.
pub const EXIT_IO: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) | CliError::Mismatch(_) => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Config(other.to_string()),
        }
    }
}

// Bad inputs are configuration errors, everything the numerics reject
// after accepting the inputs is a numeric one.
impl From<paramp::Error> for CliError {
    fn from(e: paramp::Error) -> Self {
        use paramp::Error as E;
        match e {
            E::InvalidParameter { .. } | E::NoCoupling | E::AboveThreshold { .. } | E::ZeroSignalDrive => {
                CliError::Config(e.to_string())
            }
            E::Unstable { .. }
            | E::BlowUp { .. }
            | E::NotConverged { .. }
            | E::InsufficientData(_)
            | E::Singular(_) => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
