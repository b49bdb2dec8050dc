use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input is outside the range the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value that should be finite came out NaN or infinite.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A layer-cake or tail integral did not decay on the sampled range.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// The input is valid but the requested evaluation route does not apply to it.
    #[error("unsupported input: {0}")]
    Unsupported(String),

    /// Bubble supports would overlap for the requested configuration.
    #[error("overlapping supports: N*|z| = {separation} but at least {required} is required")]
    Overlap { separation: f64, required: f64 },

    /// A sweep point failed; names the family and parameter value.
    #[error("{family} sweep failed at {parameter} = {value}: {source}")]
    Sweep {
        family: String,
        parameter: String,
        value: f64,
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("{what} is not finite ({value})")))
    }
}
