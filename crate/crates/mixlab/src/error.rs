use thiserror::Error;

pub type Result<T> = std::result::Result<T, MixError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("density has non-zero mean {mean:e}")]
    NonZeroMean { mean: f64 },
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("negative value {value:e} in a non-negative input")]
    NegativeInput { value: f64 },
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("function is not strictly increasing (min slope {min_slope:e})")]
    NotIncreasing { min_slope: f64 },
    #[error("endpoint values are not anti-balanced (f(-a) + f(a) = {defect:e})")]
    NotAntiBalanced { defect: f64 },
    #[error("no balance point w(-x) = -w(x) found in (0, a]")]
    NoBalancePoint,
    #[error("only {accepted} admissible samples were produced")]
    SamplingExhausted { accepted: usize },
    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("degenerate state: {0}")]
    DegenerateState(String),
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("step budget of {0} steps exhausted")]
    StepBudgetExhausted(usize),
    #[error("need at least {needed} states, got {got}")]
    TooFewStates { needed: usize, got: usize },
    #[error("time {t} outside the open interval (0, {t_max})")]
    OutOfTimeRange { t: f64, t_max: f64 },
    #[error("mixing zone is empty (alpha = {alpha})")]
    EmptyMixingZone { alpha: f64 },
    #[error("first velocity component {0:e} is not zero")]
    NonzeroFirstVelocity(f64),
    #[error("velocity norm {0:e} is not zero")]
    NonzeroVelocity(f64),
    #[error("point is not on the K1 boundary (defect {defect:e})")]
    NotInK1 { defect: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}
