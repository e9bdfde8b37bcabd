use thiserror::Error;

use mosaic_core::arithmetic::ArithmeticError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 for a computation that could not finish.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn numeric(e: impl std::fmt::Display) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<ArithmeticError> for CliError {
    fn from(e: ArithmeticError) -> Self {
        match e {
            ArithmeticError::NotInUnitInterval
            | ArithmeticError::EmptyCoefficients
            | ArithmeticError::ForbiddenPhase { .. }
            | ArithmeticError::TargetUnreachable { .. }
            | ArithmeticError::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}
