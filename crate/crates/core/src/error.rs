use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("elasticity c = {0} outside the sub-critical interval (0, {cr})", cr = crate::analytic::critical_elasticity())]
    ElasticityOutOfRange(f64),

    #[error("moment of order {0} diverges (order must be < 1/2)")]
    DivergentMoment(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid start state (x = {x}, u = {u})")]
    InvalidState { x: f64, u: f64 },

    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    NoBracket { lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { tol: f64, err: f64 },

    #[error("rejection sampler exceeded {0} proposals")]
    RejectionGuard(usize),

    #[error("walk exceeded the step cap of {0}")]
    StepCap(usize),

    #[error("more than {0} bounces inside one integration step")]
    BounceGuard(usize),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("fit window contains {0} points")]
    EmptyWindow(usize),

    #[error("ladder table is empty")]
    EmptyTable,

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
