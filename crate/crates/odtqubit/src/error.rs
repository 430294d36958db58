use thiserror::Error;

/// Errors produced by constructors and operations across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A composite input (trap, ensemble, sequence, data file) failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// The adaptive integrator could not meet its tolerance.
    #[error("integration failure: {0}")]
    Integration(String),

    /// A species preset file could not be parsed.
    #[error("species file, line {line}: {msg}")]
    SpeciesParse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
