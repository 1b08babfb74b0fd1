use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its invariant. `path` names the field
    /// in the scenario schema (dot separated) when it is known.
    #[error("{path}: {message}")]
    InvalidField { path: String, message: String },

    /// Structural configuration problem not tied to a single field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument lies outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The derivative function returned a non-finite value.
    #[error("integration fault at step {step}: {detail}")]
    IntegrationFault { step: usize, detail: String },

    /// The caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The input makes the requested quantity undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The proximity sensor output is not positive, so `xi_dot / xi` is undefined.
    #[error("proximity signal lost (xi = {0})")]
    SignalLost(f64),

    /// A contact metric was requested from a trace without a contact event.
    #[error("no contact event in trace")]
    NoContact,

    /// Mismatched or malformed inputs (grid sizes, series lengths).
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidField {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
