use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-contract input (non-finite entries, wrong shapes, non-SPD matrices).
    #[error("invalid input: {0}")]
    Input(String),

    /// The dimension/sample ratio violates the proportional regime `p < n`.
    #[error("regime violation: p = {p} must be smaller than n = {n} (p/n must lie in (0, 1))")]
    Regime { p: usize, n: usize },

    /// Evaluation of a rational spectral function at one of its poles.
    #[error("domain error: x = {x} coincides with pole {root} (index {index})")]
    Domain { x: f64, root: f64, index: usize },

    /// Quadrature or iterative refinement did not converge.
    #[error("numerical failure: {message} (interval {interval:?})")]
    Numerical {
        message: String,
        interval: Option<usize>,
    },

    /// Repeated eigenvalues that the perturbation fallback could not separate.
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    /// Invalid configuration (contour placement, model description, options).
    #[error("configuration error: {0}")]
    Config(String),

    /// Unreadable matrix or model file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, interval: Option<usize>) -> Self {
        Error::Numerical {
            message: msg.into(),
            interval,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
