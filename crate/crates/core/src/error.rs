use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// Inputs have incompatible lengths or dimensions.
    #[error("shape error: {0}")]
    Shape(String),
    /// Quadrature did not reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// An optimizer or root finder did not meet its stopping rule.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// A variance profile violates the negativity assumption.
    #[error("assumption error: {0}")]
    Assumption(String),
    /// Reading or writing a file failed, or its contents are malformed.
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
