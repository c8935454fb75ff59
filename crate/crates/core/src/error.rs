use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input violated an operation's precondition (symmetry, skewness, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A factorization failed to converge or produced an out-of-tolerance result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The method cannot be applied to this instance (e.g. a blocked direct link).
    #[error("method not applicable: {0}")]
    Inapplicable(String),
}
