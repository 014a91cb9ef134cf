use std::fmt;

use fiberlay::FiberError;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FiberError> for CliError {
    fn from(e: FiberError) -> Self {
        match e {
            FiberError::StepFailure { .. } | FiberError::ChartExit { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
