use thiserror::Error;

/// Errors raised by the CAS model and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CasError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or matrix dimensions do not match.
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape { what: &'static str, expected: usize, got: usize },

    /// The computation has no meaningful result (e.g. an all-zero update).
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// Invalid system configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, CasError>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CasError::Shape { what, expected, got })
    }
}
