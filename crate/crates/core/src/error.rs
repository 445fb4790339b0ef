use thiserror::Error;

/// Errors shared across the crate.
///
/// Numerical routines reserve `Err` for caller mistakes (bad parameters,
/// mismatched grids, infeasible targets). Quality-of-result concerns such as
/// norm drift or negative overshoot are reported through output fields, never
/// through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel order {0} is not supported (orders 1 and 2 have constrained solutions)")]
    UnsupportedKernelOrder(usize),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
