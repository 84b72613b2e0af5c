use rctm_core::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("certificate violation: {0}")]
    Certificate(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Certificate(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            Error::InnerBoundExceeded { .. } => CliError::Certificate(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
