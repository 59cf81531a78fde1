use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("variable {var} is referenced by an alive clause but unassigned")]
    IncompleteAssignment { var: usize },

    #[error("variable {var} is already assigned")]
    Reassigned { var: usize },

    #[error("domain size {d} is not prime; exact elimination needs a field")]
    UnsupportedDomain { d: u32 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("core witness does not satisfy clause {clause}")]
    InvalidWitness { clause: usize },

    #[error("negative density {value:e} at t = {t}; step size floor {floor:e} reached")]
    StepSize { t: f64, value: f64, floor: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
