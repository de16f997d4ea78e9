use thiserror::Error;

/// Errors raised by the operator algebra and everything built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("POVM elements do not sum to identity (max deviation {0:e})")]
    IncompletePovm(f64),

    #[error("Kraus operators are not trace preserving (max deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("operator is singular (min eigenvalue {0:e}) but a negative power was requested")]
    Singular(f64),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    range: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
