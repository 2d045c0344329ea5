use malliavin_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] malliavin_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::InvalidParameter(_) => 2,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 3,
            CliError::Core(
                CoreError::BadParameters(_)
                | CoreError::BadKernel(_)
                | CoreError::BadDensity(_)
                | CoreError::NegativeTime(_)
                | CoreError::TooFewSamples { .. }
                | CoreError::IndexOutOfRange { .. }
                | CoreError::Parse(_),
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}
