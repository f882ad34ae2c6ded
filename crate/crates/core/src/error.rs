use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} did not converge (residual {residual:e})")]
    Numeric { what: &'static str, residual: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid group element: {0}")]
    InvalidGroupElement(String),

    #[error("Lai count is ill-posed: {0} degenerate point(s) in the list")]
    IllPosedCount(usize),

    #[error("sampling budget exhausted after {0} draws")]
    Sampling(usize),

    #[error("spectrum still non-generic after {0} perturbation retries")]
    Genericity(usize),

    #[error("path construction failed: {0}")]
    PathConstruction(String),

    #[error("segment {segment} ({kind}) failed certification near t = {worst_t}")]
    Certification {
        segment: usize,
        kind: String,
        worst_t: f64,
    },
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
