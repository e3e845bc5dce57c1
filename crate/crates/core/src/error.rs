use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OtocError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("perturbation order {0} is outside 0..=3")]
    OrderOutOfRange(u8),

    #[error("level {level} is beyond the truncation (dimension {dim})")]
    LevelOutOfRange { level: usize, dim: usize },

    #[error("truncation too small: need at least {needed} levels, have {available}")]
    TruncationTooSmall { needed: usize, available: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("non-positive value {value:e} at t = {t} inside the fit window")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("series too short: {what}")]
    SeriesTooShort { what: String },
}

pub type Result<T, E = OtocError> = std::result::Result<T, E>;
