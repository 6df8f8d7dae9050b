use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("N must be odd (got {0})")]
    EvenCellCount(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("profile sample {index} is not positive ({value})")]
    NonPositiveSample { index: usize, value: f64 },
    #[error("profile is not symmetric at velocity cell {index}")]
    AsymmetricProfile { index: usize },
    #[error("equilibrium density must be positive (got {0})")]
    NonPositiveRho(f64),
    #[error("delta fraction must lie in (0, 1) (got {0})")]
    InvalidDeltaFraction(f64),
    #[error("delta {delta} outside the admissible range (0, {ceiling})")]
    DeltaOutOfRange { delta: f64, ceiling: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("singular operator (zero pivot in block {block})")]
    SingularOperator { block: usize },
    #[error("linear solve failed")]
    SolveFailure,
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("mass-difference drift {drift:e} exceeds tolerance")]
    MassDrift { drift: f64 },
    #[error("adaptive step failed: dt reached the minimum {dt_min:e} without convergence")]
    StepFailed { dt_min: f64 },
    #[error("Poisson right-hand side has non-zero mean {0:e}")]
    NonZeroMean(f64),
    #[error("decay fit needs at least 5 points (got {0})")]
    InsufficientData(usize),
    #[error("decay fit window contains values below the floor")]
    NonPositiveValues,
}
