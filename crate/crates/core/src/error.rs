use core::fmt;

use crate::integrator::Substep;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on a parameter or grid shape failed.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Two fields that must share a grid (or sphere basis) do not.
    GridMismatch,
    /// A data buffer has the wrong length for its grid.
    LengthMismatch { expected: usize, found: usize },
    /// A field that must be nonnegative has a negative entry.
    Negative {
        what: &'static str,
        cell: usize,
        value: f64,
    },
    /// An orientation distribution dips below the positivity tolerance.
    PositivityViolation {
        cell: usize,
        node: usize,
        value: f64,
    },
    /// Time step larger than the stability bound.
    CflViolation { dt: f64, limit: f64 },
    /// The implicit viscous solve did not reach its tolerance.
    ViscousSolve { iterations: usize, residual: f64 },
    /// A nonfinite value appeared.
    NonFinite { what: &'static str },
    /// A substep of the coupled integrator failed.
    Step {
        substep: Substep,
        t: f64,
        source: alloc::boxed::Box<Error>,
    },
    /// One run of a γ sweep failed.
    Sweep {
        gamma: f64,
        source: alloc::boxed::Box<Error>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::GridMismatch => write!(f, "fields live on different grids or sphere bases"),
            Error::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} values, found {found}")
            }
            Error::Negative { what, cell, value } => {
                write!(f, "{what} is negative ({value:e}) in cell {cell}")
            }
            Error::PositivityViolation { cell, node, value } => write!(
                f,
                "orientation distribution is {value:e} at node {node} of cell {cell}"
            ),
            Error::CflViolation { dt, limit } => {
                write!(f, "time step {dt:e} exceeds stability limit {limit:e}")
            }
            Error::ViscousSolve {
                iterations,
                residual,
            } => write!(
                f,
                "viscous solve stalled after {iterations} iterations (relative residual {residual:e})"
            ),
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::Step { substep, t, source } => {
                write!(f, "{substep} substep failed at t = {t}: {source}")
            }
            Error::Sweep { gamma, source } => write!(f, "run with gamma = {gamma} failed: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Step { source, .. } | Error::Sweep { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
