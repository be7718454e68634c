use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown gallery operator `{0}`")]
    UnknownOperator(String),

    #[error("operator `{name}` is not a {lambda}-strict pseudocontraction: {reason}")]
    Inadmissible {
        name: String,
        lambda: f64,
        reason: String,
    },

    #[error("operator `{0}` carries no linear representation or stored fixed-point set")]
    NoRepresentation(String),

    #[error("fixed-point set is empty (inconsistent system)")]
    EmptyFixedSet,

    #[error("singular linear system")]
    Singular,

    #[error("schedule out of range at n = {n}: {reason}")]
    ScheduleOutOfRange { n: usize, reason: String },

    #[error("anchor solver did not converge at t = {t}: residual {residual:e}")]
    AnchorNonConvergence { t: f64, residual: f64 },

    #[error("anchor path failed the Cauchy check: {0}")]
    CauchyCheck(String),

    #[error("divergence guard fired at step {step}: |x_n| = {norm:e} exceeds {bound:e}")]
    Divergence { step: usize, norm: f64, bound: f64 },
}
