use thiserror::Error;

/// Failures of a CLI command, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration, arguments or input files.
    #[error("{0}")]
    Config(String),
    /// The integrator produced non-finite values.
    #[error("numeric fault: {0}")]
    Numeric(String),
    /// A contact metric was requested but no contact occurred.
    #[error("no contact: {0}")]
    NoContact(String),
    /// At least one verification check failed.
    #[error("verification failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) | CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::NoContact(_) => 4,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<preimpact_core::Error> for CliError {
    fn from(e: preimpact_core::Error) -> Self {
        use preimpact_core::Error as E;
        match e {
            E::IntegrationFault { .. } | E::SignalLost(_) => CliError::Numeric(e.to_string()),
            E::NoContact => CliError::NoContact(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
