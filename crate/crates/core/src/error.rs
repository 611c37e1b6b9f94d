use thiserror::Error;

/// Errors produced by construction, validation and solver bridging.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not a CPTP Choi (deviation {0:.3e})")]
    NotCptp(f64),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
