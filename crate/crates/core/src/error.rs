use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network is numerically singular (reciprocal condition estimate {rcond:.3e})")]
    SingularNetwork { rcond: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("capacitance {c:.6e} F outside [{min:.6e}, {max:.6e}] F")]
    OutOfRangeCapacitance { c: f64, min: f64, max: f64 },

    #[error("zero series resistance: the admittance circle degenerates")]
    ZeroResistance,

    #[error("arc angle is not monotone in capacitance")]
    NonMonotoneArc,

    #[error("angle {theta} outside arc [{min}, {max}]")]
    OutOfRangeTheta { theta: f64, min: f64, max: f64 },

    #[error("singular subproblem: {0}")]
    SingularSubproblem(String),

    #[error("group {group} channel norm {norm:.3e} is too small to normalize")]
    DegenerateGroupChannel { group: usize, norm: f64 },

    #[error("bisection bracket not found after {doublings} doublings")]
    BisectionFailure { doublings: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
