use thiserror::Error;

/// Errors raised by the combination, decorrelation and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid truncation: k = {k}, L = {l}")]
    Truncation { k: usize, l: usize },

    #[error("correlation matrix is not positive semidefinite (minimum eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("correlation matrix is near-singular (minimum eigenvalue {eigenvalue:.3e} <= {threshold:.0e}); consider a ridge")]
    Singular { eigenvalue: f64, threshold: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
