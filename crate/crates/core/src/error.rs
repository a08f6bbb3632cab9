use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or model parameter is outside its domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Cholesky factorization failed even after jitter.
    #[error("matrix is not symmetric positive definite ({0})")]
    NotSpd(String),

    #[error("graph is not decomposable")]
    NotDecomposable,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input data rejected before any sampling took place.
    #[error("data validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("chain is empty")]
    EmptyChain,

    #[error("numerical failure at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        match self {
            e @ Error::Chain { .. } => e,
            other => Error::Chain {
                iteration,
                source: Box::new(other),
            },
        }
    }

    /// True for failures that originate in floating point / factorization problems.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotSpd(_) | Error::Domain(_) => true,
            Error::Chain { .. } => true,
            _ => false,
        }
    }
}
