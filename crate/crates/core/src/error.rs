use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain where the quantity is defined.
    Domain { what: &'static str, value: f64 },
    /// Inconsistent or degenerate parameters.
    Configuration(String),
    /// An iterative method missed its tolerance.
    Numerical { what: &'static str, residual: f64 },
    /// A constructed object failed one of its defining identities.
    Construction { what: &'static str, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what}: {value} is outside the domain"),
            Error::Configuration(msg) => write!(f, "configuration error: {msg}"),
            Error::Numerical { what, residual } => {
                write!(f, "{what} did not converge (residual {residual:e})")
            }
            Error::Construction { what, residual } => {
                write!(f, "construction failed: {what} (residual {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Configuration(msg.into())
}
