use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("eigen-solver did not converge for a {0}-point quadrature rule")]
    EigenSolve(usize),

    #[error("quadrature not resolved: {0}")]
    Resolution(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("dyadic axiom ({axiom}) violated: {detail}")]
    DyadicAxiom { axiom: &'static str, detail: String },

    #[error("sparse extraction failed: {0}")]
    SparseExtraction(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
