use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or parameter value violates its invariant.
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    /// The dynamic stiffness matrix could not be factorized.
    #[error("system matrix is singular at {frequency_hz} Hz")]
    SingularSystem { frequency_hz: f64 },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("target log-density returned NaN at iteration {iteration}")]
    NanTarget { iteration: usize },

    #[error("failed to parse config: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Returns an [`Error::Invalid`] unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}
