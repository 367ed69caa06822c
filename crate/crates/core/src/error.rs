use thiserror::Error;

use crate::model::BeamformingSolution;

/// Errors raised by the solvers and the instance model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// The SINR constraint set is empty even with unlimited transmit power.
    #[error("SINR targets are jointly infeasible at any power level")]
    SinrInfeasible,

    /// No activation pattern admits a feasible beamformer.
    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("conic engine failed: {0}")]
    NumericalFailure(String),

    #[error("operation requires an optimal subproblem outcome, got {0}")]
    WrongStatus(String),

    /// Iteration or solve budget exhausted before the bounds met.
    #[error("iteration limit reached (LB = {lb:.6e}, UB = {ub:.6e})")]
    IterationLimit {
        best: Option<Box<BeamformingSolution>>,
        lb: f64,
        ub: f64,
        iterations: usize,
        /// Conic engine invocations spent.
        solves: usize,
    },

    #[error("matrix is not rank one (eigenvalue ratio {ratio:.3e})")]
    NotRankOne { ratio: f64 },

    #[error("randomized rounding found no feasible candidate after {samples} draws")]
    RoundingFailed { samples: usize },

    #[error("enumeration guard: L = {0} exceeds 24")]
    TooLarge(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
