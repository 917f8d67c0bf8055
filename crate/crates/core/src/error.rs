use thiserror::Error;

use crate::laplace::QuadratureError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("divergent: {0}")]
    Divergent(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("power iteration did not converge after {iterations} iterations; norm estimate in [{lower}, {upper}]")]
    PowerIteration { iterations: usize, lower: f64, upper: f64 },
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::PowerIteration { .. } | Error::Divergent(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
