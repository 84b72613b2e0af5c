use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported combination: {0}")]
    Unsupported(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    /// The inner solver ran out of iterations; `best` is the iterate with the
    /// smallest stationarity residual seen.
    #[error("subsolver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
    /// An inner proximal loop ran far past its guaranteed iteration count.
    #[error("outer step {outer} used {inner} inner steps, more than ten times the bound {bound}")]
    InnerBoundExceeded {
        outer: usize,
        inner: usize,
        bound: usize,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
