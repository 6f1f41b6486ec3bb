use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain where the operation is defined.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Vector or matrix dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The data make the quantity undefined (zero norm, singular Gram matrix, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Not enough samples for the requested estimator.
    #[error("insufficient samples: {0}")]
    Size(String),

    /// Evaluation at a pole of a special function.
    #[error("pole of {function} at x = {x}")]
    Pole { function: &'static str, x: f64 },

    /// A numerical procedure missed its accuracy target.
    #[error("accuracy target missed: {message} (best estimate {estimate:e})")]
    Accuracy { message: String, estimate: f64 },

    /// The surrogate loss has infinite expectation for `p ≥ α < 2`.
    #[error("unstable regime: p = {p} >= alpha = {alpha}")]
    Unstable { p: f64, alpha: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// True for errors that come from a numerical method rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Accuracy { .. } | Error::Pole { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
