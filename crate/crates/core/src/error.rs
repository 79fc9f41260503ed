use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("energy weight is not symmetric positive definite: {0}")]
    WeightNotSpd(String),

    #[error("node is not dissipative (largest symmetric eigenvalue {max_sym_eig:e})")]
    NotDissipative { max_sym_eig: f64 },

    #[error("coupling is not monotone (largest symmetric eigenvalue {max_sym_eig:e})")]
    CouplingNotMonotone { max_sym_eig: f64 },

    #[error("node is not partially strictly output passive")]
    NotPsop,

    #[error("s is (numerically) an eigenvalue of the main operator")]
    SingularResolvent,

    #[error("cannot compose an empty list of nodes")]
    EmptyList,

    #[error("trajectories live on different grids or have different shapes: {0}")]
    GridMismatch(String),

    #[error("expected a {expected} sampled trajectory")]
    SamplingMismatch { expected: &'static str },

    #[error("weight omega must be non-negative, got {0}")]
    NegativeOmega(f64),

    #[error("bound requires omega > 0")]
    OmegaZero,

    #[error("singular step matrix at step {step}")]
    SingularStep { step: usize },

    #[error("I - lambda N_c is singular")]
    SingularCoupling,

    #[error("closed-loop step matrix is singular at step {step}")]
    SingularClosedLoop { step: usize },

    #[error("invalid parameter: {0}")]
    BadParams(String),

    #[error("interface grids do not conform: {0}")]
    NonconformingInterface(String),
}

pub type Result<T> = std::result::Result<T, Error>;
