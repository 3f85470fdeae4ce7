use thiserror::Error;

/// Errors produced by the model, the planners and the file formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("grid [{lo:.6e}, {hi:.6e}] m does not cover the required span [{need_lo:.6e}, {need_hi:.6e}] m")]
    GridTooNarrow {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),

    #[error("insufficient wavenumber resolution: {0}")]
    InsufficientResolution(String),

    #[error("integration window [{lo:.6e}, {hi:.6e}] m exceeds the curve grid")]
    WindowOutsideGrid { lo: f64, hi: f64 },

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("invalid phase choice: {0}")]
    InvalidPhase(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn require_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {value}")))
    }
}

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    require_finite(field, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(field: &'static str, value: f64) -> Result<()> {
    require_finite(field, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be >= 0, got {value}")))
    }
}
