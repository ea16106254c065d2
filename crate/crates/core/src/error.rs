use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A question row of the association matrix has no answers.
    #[error("question {question} has no answers; every question needs at least one answer")]
    EmptyQuestion { question: u64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate training scores: max ({max}) must exceed min ({min})")]
    DegenerateScores { min: f64, max: f64 },

    #[error(
        "train fraction {percent}% of {questions} questions leaves an empty train or test set"
    )]
    EmptySplit { percent: f64, questions: usize },

    #[error("singular linear system; {advice}")]
    Singular { advice: &'static str },

    #[error("gradient descent diverged at iteration {iteration} with step size {step}")]
    Diverged { iteration: usize, step: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("malformed XML in {path} at byte {offset}: {message}")]
    Xml {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("feature schema mismatch:\n{0}")]
    SchemaMismatch(String),

    #[error("cannot parse {what}: {message}")]
    Format { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
