use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable z{index} exceeds ambient dimension {dim}")]
    VariableIndex { index: usize, dim: usize },

    #[error("domain error: {what} at point {point:?}")]
    Domain { what: String, point: Vec<Complex64> },

    #[error("field is not real-valued: |Im u| = {max_imag:e} at {witness:?}")]
    NotReal {
        max_imag: f64,
        witness: Vec<Complex64>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular metric: Levi form has eigenvalue {eigenvalue:e} at {point:?}")]
    SingularMetric {
        eigenvalue: f64,
        point: Vec<Complex64>,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("insufficient tail: {have} usable samples, need {need}")]
    InsufficientTail { have: usize, need: usize },

    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("invalid group action: {0}")]
    InvalidAction(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn domain(what: impl Into<String>, point: &[Complex64]) -> Self {
        Error::Domain {
            what: what.into(),
            point: point.to_vec(),
        }
    }
}
