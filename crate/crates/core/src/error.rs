//! Error types shared across the library.
//!
//! Every fallible operation returns [`Error`]. Variants are grouped by the
//! process exit code a CLI driver should map them to: invalid input (2),
//! numerical non-convergence (3), and resource caps (4).

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Model parameters violate a structural constraint (e.g. N·d ≠ M·k).
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// An input value is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative solver failed to converge within its budget.
    /// Carries the trailing iterates for diagnosis.
    #[error("non-convergence: {context} (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence {
        context: String,
        residual: f64,
        iterations: usize,
        /// Most recent iterates of the quantity being solved for.
        trajectory: Vec<f64>,
    },

    /// A bracketing root finder found no sign change on its interval.
    #[error("no sign change on bracket [{lo}, {hi}]: f(lo) = {f_lo:.6e}, f(hi) = {f_hi:.6e}")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// A problem size exceeds a configured enumeration cap.
    #[error("resource limit: {what} = {requested} exceeds cap {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    /// A normalizer that must be positive was not (log of non-positive value).
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
}

impl Error {
    /// Process exit code for CLI drivers: 2 invalid input, 3 non-convergence,
    /// 4 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameters(_)
            | Error::InvalidInput(_)
            | Error::DegenerateParameters(_) => 2,
            Error::NonConvergence { .. } | Error::NoBracket { .. } => 3,
            Error::ResourceLimit { .. } => 4,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
