//! Error types shared by all solver and assembly modules.

use thiserror::Error;

/// Errors produced by basis construction, solvers, and checks.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("energy cutoff {cutoff} lies below the lowest eigenvalue {e1}; basis would be empty")]
    EmptyBasis { cutoff: f64, e1: f64 },

    #[error("requested sizes (B={b}, M={m}) exceed the available basis ({available} modes)")]
    OutOfBounds { b: usize, m: usize, available: usize },

    #[error("spectral coverage insufficient: need eigenvalues up to {needed}, basis tops out at {available}")]
    InsufficientBasis { needed: f64, available: f64 },

    #[error("electron spectral gap {gap:.3e} below degeneracy tolerance {tol:.3e}; reduced resolvent undefined")]
    DegenerateGap { gap: f64, tol: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Energy recorded at each iteration, for post-mortem inspection.
        trajectory: Vec<f64>,
    },

    #[error("truncated sum tail estimate {tail:.3e} exceeds requested tolerance {tol:.3e} (partial sum {partial:.6e})")]
    Accuracy { partial: f64, tail: f64, tol: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("eigenvalue {value} of K is >= 1; outside the stable-Hessian regime")]
    OutOfRegime { value: f64 },

    #[error("state space of dimension {dim} exceeds the configured budget of {budget} entries")]
    MemoryBudget { dim: usize, budget: usize },

    #[error("iterative eigensolver did not reach residual {tol:.3e} after {iterations} iterations (best {best:.3e})")]
    EigensolverStall { iterations: usize, tol: f64, best: f64 },

    #[error("grid refinement changed the result by {change:.3e}, above the convergence target {target:.3e}")]
    GridConvergence { change: f64, target: f64 },

    #[error("occupation cutoff not converged at alpha = {alpha}: doubling P moved E0 by {change:.3e} (target {target:.3e})")]
    CutoffNotConverged { alpha: f64, change: f64, target: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;
