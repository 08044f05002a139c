use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point query for a competitor model fell outside its support.
    #[error("outside support: {0}")]
    OutsideSupport(String),

    /// An invalid censoring plan, block design or study configuration.
    #[error("design error: {0}")]
    Design(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("numeric error in facility {facility}: {message}")]
    Numeric { facility: usize, message: String },

    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The observed information matrix is singular or not positive definite.
    #[error("information matrix is not positive definite: {0}")]
    NonPositiveDefinite(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    /// A bookkeeping invariant was violated. Indicates a bug or an invalid design.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
