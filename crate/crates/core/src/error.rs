use thiserror::Error;

/// Errors raised by the dressed-energy machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameters outside the critical regime: {0}")]
    OutOfRegime(String),

    #[error("argument {lambda} lies within {distance:e} of a pole at {pole}")]
    PoleProximity {
        lambda: String,
        pole: String,
        distance: f64,
    },

    #[error("argument {lambda} outside the validity strip |Im| < {limit}")]
    StripViolation { lambda: String, limit: f64 },

    #[error("argument {lambda} lies within {distance:e} of a cut (guard {guard:e})")]
    CutProximity {
        lambda: String,
        distance: f64,
        guard: f64,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("iteration cap of {cap} exceeded ({what})")]
    IterationCap { what: &'static str, cap: usize },

    #[error("tail truncation bound {bound:e} exceeds tolerance {tol:e}")]
    TailBound { bound: f64, tol: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("degenerate derivative: {0}")]
    DegenerateDerivative(String),

    #[error("limit estimate did not converge: {0}")]
    NonConvergence(String),

    #[error("region {0} has no admissible grid points")]
    EmptyRegion(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
