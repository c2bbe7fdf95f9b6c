use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("parameters satisfy neither the existence nor the critical hypotheses: {0}")]
    UnsupportedRegime(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("fiber map has no negative value at t = 1 (phi = {phi})")]
    NoNegativeFiber { phi: f64 },

    #[error("root bracketing failed: {0}")]
    RootBracketFailure(String),

    #[error("point is not on M0 (phi/A = {phi_rel:e}, psi/A = {psi_rel:e})")]
    NotOnM0 { phi_rel: f64, psi_rel: f64 },

    #[error("point is not on the Nehari manifold (phi/A = {phi_rel:e})")]
    NotOnM { phi_rel: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operator assembly failed: {0}")]
    AssemblyFailure(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("constraint gradient vanishes (|grad phi| = {norm:e})")]
    DegenerateConstraint { norm: f64 },

    #[error("could not initialize on M+: {0}")]
    InitializationFailure(String),

    #[error("no convergence after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    ConvergenceFailure(Box<SolveReport>),

    #[error("lost the M+ branch: {reason}")]
    BranchLossFailure {
        reason: String,
        report: Option<Box<SolveReport>>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
