use anc_core::AncError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed config, or a config-level invariant.
    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Model(AncError),

    #[error("{0}")]
    Regime(AncError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<AncError> for CliError {
    fn from(e: AncError) -> Self {
        match e {
            AncError::RegimeViolation { .. } => CliError::Regime(e),
            AncError::UnknownStrategy { .. }
            | AncError::InvalidDelta(_)
            | AncError::VacuousGapBound(_) => CliError::Config(e.to_string()),
            e => CliError::Model(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Model(_) => 2,
            CliError::Regime(_) => 3,
        }
    }
}
