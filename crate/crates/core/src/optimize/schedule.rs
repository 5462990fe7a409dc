use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleKind {
    Constant,
    /// Halve every `period` steps.
    ExpHalving { period: u64 },
    /// Halve every `period` steps until `warm_steps`, then hold.
    WarmThenConstant { period: u64, warm_steps: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub lr0: f64,
    #[serde(flatten)]
    pub kind: ScheduleKind,
}

impl Schedule {
    pub fn constant(lr0: f64) -> Self {
        Self {
            lr0,
            kind: ScheduleKind::Constant,
        }
    }

    pub fn exp_halving(lr0: f64, period: u64) -> Self {
        Self {
            lr0,
            kind: ScheduleKind::ExpHalving { period },
        }
    }

    pub fn warm_then_constant(lr0: f64, period: u64, warm_steps: u64) -> Self {
        Self {
            lr0,
            kind: ScheduleKind::WarmThenConstant { period, warm_steps },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(invalid(format!("learning rate must be positive, got {}", self.lr0)));
        }
        match self.kind {
            ScheduleKind::ExpHalving { period: 0 } | ScheduleKind::WarmThenConstant { period: 0, .. } => {
                Err(invalid("schedule period must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn lr_at(&self, step: u64) -> f64 {
        let halvings = match self.kind {
            ScheduleKind::Constant => 0,
            ScheduleKind::ExpHalving { period } => step / period,
            ScheduleKind::WarmThenConstant { period, warm_steps } => step.min(warm_steps) / period,
        };
        // Clamp the exponent so the rate stays a positive normal number.
        self.lr0 * 0.5f64.powi(halvings.min(1000) as i32)
    }
}
