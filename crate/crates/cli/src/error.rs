use thiserror::Error;

/// Failures surfaced by the command-line front end, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Format(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(aeromap_core::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<aeromap_core::Error> for CliError {
    fn from(e: aeromap_core::Error) -> Self {
        match e {
            aeromap_core::Error::Io(io) => CliError::Io(io),
            aeromap_core::Error::NonFinite(_) | aeromap_core::Error::Degenerate(_) => CliError::Numerical(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// 0 ok, 1 validation, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Format(_) | CliError::Missing(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) | CliError::Config(_) | CliError::Core(_) => 1,
        }
    }
}
