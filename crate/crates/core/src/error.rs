//! Error taxonomy shared by every module.
//!
//! Numerical failure modes (vacuum, instability, charge imbalance, stalled
//! iteration) are first-class variants so callers can react to them without
//! string matching; the CLI maps them onto exit codes.

use crate::rqhd::IterationReport;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Poisson data with nonzero spatial mean: on the torus ΔV = rhs is
    /// solvable only for zero-mean right-hand sides.
    #[error("poisson right-hand side has mean {mean:.3e} exceeding {tol:.3e} (charge imbalance)")]
    Compatibility { mean: f64, tol: f64 },

    #[error("{what} out of range: {details}")]
    Domain { what: &'static str, details: String },

    /// A parameter value for which the requested formulation degenerates.
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("time step {dt:.6e} exceeds stability bound {bound:.6e}")]
    Stability { dt: f64, bound: f64 },

    /// Density at or below the vacuum floor; the phase is undefined there.
    #[error("vacuum encountered: min density {min_density:.6e} below floor {floor:.6e}")]
    Vacuum { min_density: f64, floor: f64 },

    #[error("velocity field is not irrotational: max |curl| {curl:.3e} exceeds {tol:.3e} relative")]
    Irrotationality { curl: f64, tol: f64 },

    #[error("time index {index} outside the valid stencil range 1..{last}")]
    Index { index: usize, last: usize },

    #[error("fixed-point iteration did not converge in {} iterations (last diff {:.3e})",
            report.iterations, report.successive_diffs.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { report: Box<IterationReport> },

    #[error("convergence study failed for {failed:?}; partial table retained")]
    Study {
        failed: Vec<String>,
        partial: Box<crate::limits::ConvergenceTable>,
    },

    #[error("cannot fit order: {0}")]
    Fit(String),

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("fields live on different grids ({0})")]
    GridMismatch(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {details}")]
    Format { path: String, details: String },
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code contract: 0 ok, 2 validation, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Parse(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 4,
            _ => 3,
        }
    }
}
