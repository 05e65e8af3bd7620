use thiserror::Error;

use crate::estimation::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// All samples coincide, so the optimal scale would be 0 (or rate infinite).
    #[error("degenerate sample: zero spread makes the scale estimate {0}")]
    DegenerateScale(&'static str),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("no convergence after {iterations} iterations")]
    ConvergenceFailure {
        iterations: usize,
        best: Box<FitResult>,
    },

    #[error("singular design matrix")]
    SingularDesign,

    #[error("numerical failure: {0}")]
    Numerics(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InsufficientData { .. }
                | Error::Parse { .. }
                | Error::Validation(_)
                | Error::Io(_)
        )
    }
}
