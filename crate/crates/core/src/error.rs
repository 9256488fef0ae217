use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: need n >= 2")]
    InvalidDimension(usize),

    #[error("matrix is not Hermitian: ||A - A^dagger|| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("negative eigenvalue {eigenvalue:e} below tolerance")]
    NegativeEigenvalue { eigenvalue: f64 },

    #[error("trace is {trace}, expected 1 (residual {residual:e})")]
    TraceNotOne { trace: f64, residual: f64 },

    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),

    #[error("vector does not lie on the simplex hyperplane: |sum - 1| = {residual:e}")]
    NotOnSimplexHyperplane { residual: f64 },

    #[error("flag frame is not unitary: ||U^dagger U - I|| = {residual:e}")]
    NonUnitaryFlag { residual: f64 },

    #[error("integration step too large at t = {time}: {reason}")]
    StepTooLarge { time: f64, reason: String },

    #[error("flag path jumps at t = {time} (projector jump {jump:e}) without a marked discontinuity")]
    FlagPathDiscontinuityUnmarked { time: f64, jump: f64 },

    #[error("eigenvalue gap {gap:e} below gap tolerance {tol:e}")]
    DegenerateGap { gap: f64, tol: f64 },

    #[error("tangent direction is not off-diagonal in the flag frame (diagonal residual {residual:e})")]
    TangentNotOffDiagonal { residual: f64 },

    #[error("tangent direction is not anti-Hermitian (residual {residual:e})")]
    TangentNotAntiHermitian { residual: f64 },

    #[error("eigenvalues {i} and {j} approach a crossing (gap {gap:e}) with non-vanishing block |M| = {block:e}")]
    NearCrossingBlowup { i: usize, j: usize, gap: f64, block: f64 },

    #[error("flag is not admissible at the crossing of {i} and {j}: |M| = {block:e}")]
    NonAdmissibleFlag { i: usize, j: usize, block: f64 },

    #[error("plan spectrum does not match endpoint state: {0}")]
    PlanSpectrumMismatch(String),

    #[error("singular combination sum s_J A_J at s = {s:?}")]
    SingularCombination { s: Vec<f64> },

    #[error("too few usable flags: need {needed}, have {have}")]
    TooFewFlags { needed: usize, have: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
