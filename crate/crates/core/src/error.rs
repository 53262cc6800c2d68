use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix is singular (pivot {pivot:e} below threshold)")]
    SingularMatrix { pivot: f64 },
    #[error("matrix is not positive definite (failed at column {column})")]
    NotPositiveDefinite { column: usize },
    #[error("right-hand side of the pencil is not positive definite")]
    IndefiniteRhs,
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("eigensolver did not converge after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("vector is degenerate in the natural norm (norm ratio {ratio:e})")]
    DegenerateVector { ratio: f64 },
    #[error("control point {mu:?} is degenerate: {reason}")]
    ControlPointDegenerate { mu: Vec<f64>, reason: String },

    #[error("SCM sample is empty")]
    EmptySample,
    #[error("simplex exceeded its anti-cycling cap after {iterations} iterations")]
    CycleDetected { iterations: usize },
    #[error("relaxed SCM linear program is infeasible at mu = {mu:?}")]
    InfeasibleRelaxation { mu: Vec<f64> },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("vertex enumeration too large: {vars} variables, {constraints} constraints")]
    TooLarge { vars: usize, constraints: usize },

    #[error("negative radicand {value:e} in upper bound evaluation")]
    NegativeRadicand { value: f64 },
    #[error("upper bound {value:e} is not positive")]
    NonpositiveUpperBound { value: f64 },
    #[error("bound registry is empty")]
    EmptyRegistry,
    #[error("subdomain at {mu:?} covered no new train points")]
    NoProgress { mu: Vec<f64> },
    #[error("train sample is empty")]
    EmptyTrainSample,

    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
