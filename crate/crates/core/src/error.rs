use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: i64, right: i64 },

    #[error("parameter constraint violated: {0}")]
    ParameterConstraint(String),

    #[error("non-positive metric rejected: {0}")]
    NotPositive(String),

    #[error("numerical failure in {context}: {diagnostic}")]
    Numerical { context: String, diagnostic: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numerical(context: impl Into<String>, diagnostic: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            diagnostic: diagnostic.into(),
        }
    }
}
