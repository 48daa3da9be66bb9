//! Error type shared across the crate.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition (dimension mismatch,
    /// reversed time interval, non-positive step size, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A model hook produced non-finite values.
    #[error("model evaluation produced non-finite values at t = {t} ({context})")]
    Evaluation { t: f64, context: String },

    /// The matrix chain did not terminate with a nonsingular matrix by level 2:
    /// the problem has index > 2 at this point or is structurally inconsistent.
    #[error("index mismatch at t = {t}: {detail}")]
    IndexMismatch { t: f64, detail: String },

    /// classify_index saw different indices at different sample points.
    #[error("non-uniform index across sample points: {0}")]
    NonUniformIndex(String),

    /// Newton iteration hit max_iterations without satisfying either exit test.
    /// Carries the best iterate seen and its residual norm.
    #[error("newton iteration did not converge after {iterations} iterations (best residual {residual_norm:.3e})")]
    NewtonNonconvergence {
        iterations: usize,
        residual_norm: f64,
        best_iterate: Vec<f64>,
    },

    /// The linearized system could not be solved (singular Jacobian).
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// An integration step failed; wraps the inner error with step context.
    #[error("step {step_index} at t = {t} (h = {h}) failed: {source}")]
    StepFailure {
        step_index: usize,
        t: f64,
        h: f64,
        #[source]
        source: Box<Error>,
    },

    /// A window solve inside a parallel-in-time run failed; wraps the inner
    /// error with the (1-based) window number and the sweep it happened in.
    #[error("window {window}, sweep {iteration}: {source}")]
    WindowFailure {
        window: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Netlist text could not be parsed.
    #[error("netlist parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The netlist fails a structural solvability check.
    #[error("structural error: {0}")]
    Structural(String),

    /// The model lacks a capability the operation requires.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// CLI configuration file problem.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}
