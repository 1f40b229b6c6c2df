//! Step-size schedules.

use crate::error::{Error, Result};

/// α_k as a function of the iteration index k (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// α_k = α for all k.
    Constant(f64),
    /// α_k = c/(k+1), the classical diminishing rule.
    Harmonic { c: f64 },
}

impl StepSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        if alpha <= 0.0 || !alpha.is_finite() {
            return Err(Error::Invalid(format!("step size must be positive (got {alpha})")));
        }
        Ok(StepSchedule::Constant(alpha))
    }

    pub fn harmonic(c: f64) -> Result<Self> {
        if c <= 0.0 || !c.is_finite() {
            return Err(Error::Invalid(format!("harmonic numerator must be positive (got {c})")));
        }
        Ok(StepSchedule::Harmonic { c })
    }

    pub fn at(&self, k: u64) -> f64 {
        match *self {
            StepSchedule::Constant(a) => a,
            StepSchedule::Harmonic { c } => c / (k as f64 + 1.0),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, StepSchedule::Constant(_))
    }
}

impl std::fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSchedule::Constant(a) => write!(f, "constant {a}"),
            StepSchedule::Harmonic { c } => write!(f, "harmonic {c}/(k+1)"),
        }
    }
}
