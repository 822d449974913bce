use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius law has no finite d-moment; an explicit truncation radius is required")]
    NonIntegrableWithoutTruncation,

    #[error("region {0} is not contained in the simulation window")]
    LambdaNotInWindow(String),

    #[error("boxes are not nested as required: {0}")]
    NestingViolation(String),

    #[error("q={q} < 1 requires a radius law with bounded support (assumption (A)); got {law}")]
    AssumptionAViolated { q: f64, law: String },

    #[error("importance weights degenerate: effective sample size {ess:.1} < {min}")]
    DegenerateWeights { ess: f64, min: f64 },

    #[error("rejection sampler exceeded its budget of {0} proposals")]
    RejectionBudgetExceeded(usize),

    #[error("not enough samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("configuration is outside the required event: {0}")]
    PreconditionEventFailed(String),

    #[error("root undefined: phi_y={phi} must exceed 8/(7q) with q={q}")]
    RootUndefined { phi: f64, q: f64 },

    #[error("eroded window is empty (border {0})")]
    ErodedWindowEmpty(f64),

    #[error("boundary fraction {0} exceeds 1/8; increase n")]
    BoundaryFractionTooLarge(f64),

    #[error("parse error: {0}")]
    Parse(String),
}
