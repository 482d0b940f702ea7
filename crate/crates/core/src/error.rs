use std::path::PathBuf;

/// Errors raised by the solver toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid stiffness: k must be positive, found k[{index}] = {value}")]
    InvalidStiffness { index: usize, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("boundary contract violated: {0}")]
    BoundaryViolation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("divergence: non-finite value at time level {level}")]
    Divergence { level: usize },
    #[error("step failure at iterate {iterate}: no descent after {shrinks} step reductions")]
    StepFailure { iterate: usize, shrinks: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("grid mismatch in {path}: {message}")]
    GridMismatch { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures raised by the numerical core (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_) | Error::Divergence { .. } | Error::StepFailure { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
