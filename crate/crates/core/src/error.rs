use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Ill-formed or mismatched inputs (bad ensemble parameters, mixed rate units, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Evaluation requested outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters that are well-formed but outside what the exact theory covers.
    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An exact identity that must hold did not.
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
