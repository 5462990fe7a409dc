use std::path::PathBuf;

use thiserror::Error;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Integrity(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<efftemp::Error> for CliError {
    fn from(e: efftemp::Error) -> Self {
        use efftemp::Error as E;
        match e {
            E::NonFinite(_) | E::NoConvergence { .. } | E::ZeroVector(_) => CliError::Numerical(e.to_string()),
            E::Format { .. } => CliError::Integrity(e.to_string()),
            E::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
