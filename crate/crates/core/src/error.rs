use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid regularizer: {0}")]
    InvalidRegularizer(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported noise model: {0}")]
    UnsupportedModel(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("invalid start: {0}")]
    InvalidStart(String),
    /// The formula is outside its range of validity; `fallback` is the value
    /// the caller may use instead.
    #[error("degenerate regime: {reason} (fallback {fallback})")]
    Degenerate { reason: String, fallback: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by a formula being evaluated outside the regime
    /// where it is defined, as opposed to malformed arguments.
    pub fn is_regime(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::UnsupportedRegime(_)
                | Error::UnsupportedModel(_)
                | Error::Degenerate { .. }
        )
    }
}
