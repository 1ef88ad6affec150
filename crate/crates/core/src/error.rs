use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Numeric payloads are reported as `f64` regardless of the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0}")]
    DimensionError(String),
    #[error("operators {first} and {second} do not commute (commutator norm {norm:e})")]
    NotCommuting { first: usize, second: usize, norm: f64 },
    #[error("g = {g} outside validity radius g_max = {g_max}")]
    OutOfValidityRange { g: f64, g_max: f64 },
    #[error("outcomes have different minimum nonzero orders: {0:?}")]
    NonUniformOrder(Vec<usize>),
    #[error("outcome {0} has no nonzero coefficient of order >= 1")]
    ConstantOutcome(usize),
    #[error("truncated POVM is not positive on any validation grid point")]
    TruncationNotPositive,
    #[error("coefficients present at orders other than 0 and {n}: {orders:?}")]
    NotMonomialGap { n: usize, orders: Vec<usize> },
    #[error("measurement operators do not form an isometry (deviation {deviation:e})")]
    NotIsometry { deviation: f64 },
    #[error("no exact contextual values (residual {residual:e} at g = {g})")]
    NoExactCv { g: f64, residual: f64 },
    #[error("contextual values vanish identically on the grid")]
    NoPole,
    #[error("postselection probability vanishes ({probability:e})")]
    OrthogonalPostselection { probability: f64 },
    #[error("random POVM generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("samples must be strictly positive (found {value:e} at g = {g})")]
    NotPositiveSamples { g: f64, value: f64 },
    #[error("matrix polynomial has degree {degree}; expected at most 1")]
    NotLinear { degree: usize },
    #[error("no postselection successes in {trials} trials")]
    NoSuccesses { trials: u64 },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
