use thiserror::Error;

/// Failures of a CLI run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable config, syntax errors, invalid parameters.
    #[error("{0}")]
    Config(String),
    /// A numerical check or acceptance threshold failed.
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<glbm::Error> for CliError {
    fn from(e: glbm::Error) -> Self {
        use glbm::Error as E;
        match e {
            E::Syntax { .. }
            | E::UnknownIndex { .. }
            | E::DimensionMismatch(_)
            | E::InvalidParameter(_)
            | E::UnsortedTimes
            | E::DimensionCap { .. }
            | E::NotEnoughSamples(_)
            | E::Format(_) => CliError::Config(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
