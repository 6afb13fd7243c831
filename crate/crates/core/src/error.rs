use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagError {
    /// Malformed input: wrong dimensions, non-positive parameters, unnormalized densities.
    #[error("validation error: {0}")]
    Validation(String),
    /// The request exceeds a configured capacity (permutation enumeration cap, solver size).
    #[error("capability exceeded: {0}")]
    Capability(String),
    /// A field or integrator produced a non-finite value.
    #[error("numeric failure at {location}: {message}")]
    Numeric { location: String, message: String },
    /// A hard invariant was violated during a run.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, MagError>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(MagError::Validation(msg.into()))
}

pub(crate) fn numeric(location: impl Into<String>, message: impl Into<String>) -> MagError {
    MagError::Numeric {
        location: location.into(),
        message: message.into(),
    }
}
