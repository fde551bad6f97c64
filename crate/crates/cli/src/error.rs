use thiserror::Error;

/// Failure classes, mapped to exit codes 2 (usage) and 1 (everything else).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] arrivals::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}
