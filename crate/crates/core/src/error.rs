use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("t = {t} lies outside the tabulated range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("unsupported: {0}")]
    Capability(String),

    /// The kernel degenerates into a delta function; the caller should apply
    /// the point map instead of quadrature.
    #[error("kernel parameter {parameter} = {value:e} is inside the delta limit (|{parameter}| <= {cutoff:e}); apply the point map instead")]
    DeltaLimit {
        parameter: &'static str,
        value: f64,
        cutoff: f64,
    },

    #[error("singular state: {0}")]
    Singularity(String),

    #[error("insufficient grid resolution: {0}")]
    Resolution(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("config error: {0}")]
    Config(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
