use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// LU factorization met a zero pivot (or one below working precision).
    #[error("matrix is singular to working precision (pivot column {column})")]
    Singular { column: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// Newton-Schulz hit its iteration cap or produced non-finite iterates.
    /// `errors` is the full `err2` sequence of the failing run.
    #[error("Newton-Schulz divergence in {stage} after {} iterations", errors.len())]
    Divergence { stage: String, errors: Vec<f64> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Prefix the stage label of a divergence error, leave others alone.
    pub(crate) fn in_stage(self, label: &str) -> Self {
        match self {
            Error::Divergence { stage, errors } => Error::Divergence {
                stage: format!("{label}: {stage}"),
                errors,
            },
            other => other,
        }
    }
}
