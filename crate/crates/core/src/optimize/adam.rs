use serde::{Deserialize, Serialize};

use super::Schedule;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub schedule: Schedule,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            schedule,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(invalid("Adam moment decay rates must lie in (0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("Adam epsilon must be positive"));
        }
        self.schedule.validate()
    }
}

/// First and second moment estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// Applies the update for optimizer step `step` (0-based) in place.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64], step: u64) -> Result<()> {
        if grad.len() != theta.len() || grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                found: grad.len(),
            });
        }
        crate::error::ensure_finite(grad, "Adam gradient")?;
        let AdamConfig { beta1, beta2, eps, schedule } = self.config;
        let lr = schedule.lr_at(step);
        let t = step.saturating_add(1).min(i32::MAX as u64) as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for k in 0..theta.len() {
            let g = grad[k];
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * g;
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * g * g;
            let mhat = self.m[k] / c1;
            let vhat = self.v[k] / c2;
            theta[k] -= lr * mhat / (vhat.sqrt() + eps);
        }
        Ok(())
    }
}
