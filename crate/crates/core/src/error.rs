use thiserror::Error;

/// Errors raised by the numerical routines and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("upper tail overflow: {0}")]
    Overflow(String),

    #[error("derivative of order {requested} requested, function supports at most {max}")]
    Order { requested: usize, max: usize },

    #[error("method `{method}` is not available for {function}")]
    UnsupportedMethod {
        method: &'static str,
        function: String,
    },

    #[error("integer coefficient overflow: {0}")]
    CoefficientOverflow(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("draw budget exhausted: {0}")]
    Budget(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
