use thiserror::Error;

/// Errors raised by the estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrddError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {below} observation(s) below the cutoff, {above} at or above")]
    InsufficientData { below: usize, above: usize },

    #[error(
        "weak discontinuity in treatment probability: p_minus = {p_minus}, p_plus = {p_plus}"
    )]
    WeakDiscontinuity { p_minus: f64, p_plus: f64 },

    #[error("evaluation point {at} outside ({lo}, {hi}]")]
    OutOfRange { at: f64, lo: f64, hi: f64 },

    #[error("degenerate design: {0}")]
    Degenerate(String),
}

impl IrddError {
    /// True for errors caused by the data or flags rather than by the estimation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            IrddError::InvalidInput(_) | IrddError::Config(_) | IrddError::OutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, IrddError>;
