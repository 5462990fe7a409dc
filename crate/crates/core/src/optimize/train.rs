use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, Lbfgs, LbfgsConfig, LbfgsStatus};
use crate::ansatz::{forward, init_params, pullback, AnsatzSpec};
use crate::error::{invalid, Error, Result};
use crate::model::Spectrum;
use crate::numerics::{SparseRealMatrix, C64};
use crate::objectives::{energy, infidelity_vs, Objective};
use crate::spectral::{decompose, fit_efftemp, mse_vs_target, Decomposition, FitOptions, FitResult, SectorFilter};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Adam(AdamConfig),
    Lbfgs(LbfgsConfig),
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            OptimizerConfig::Adam(c) => c.validate(),
            OptimizerConfig::Lbfgs(c) => c.validate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub total_steps: u64,
    pub record_every: u64,
    pub seed: u64,
    /// Steps whose parameters are kept in the outcome (for checkpoints and scatter exports).
    pub snapshot_steps: BTreeSet<u64>,
    /// Real elapsed time in records; off keeps trajectories byte-reproducible.
    pub record_wall_time: bool,
}

impl TrainConfig {
    pub fn new(optimizer: OptimizerConfig, total_steps: u64, seed: u64) -> Self {
        Self {
            optimizer,
            total_steps,
            record_every: 25,
            seed,
            snapshot_steps: BTreeSet::new(),
            record_wall_time: false,
        }
    }
}

/// What each record measures besides the loss.
pub struct Monitor<'a> {
    pub hamiltonian: &'a SparseRealMatrix,
    pub target: &'a [C64],
    /// Enables effective-temperature snapshots.
    pub spectrum: Option<&'a Spectrum>,
    pub fit: FitOptions,
    pub sector_filter: Option<SectorFilter>,
    target_decomp: Option<Decomposition>,
}

impl<'a> Monitor<'a> {
    pub fn new(
        hamiltonian: &'a SparseRealMatrix,
        target: &'a [C64],
        spectrum: Option<&'a Spectrum>,
        fit: FitOptions,
        sector_filter: Option<SectorFilter>,
    ) -> Result<Self> {
        if target.len() != hamiltonian.dim() {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.dim(),
                found: target.len(),
            });
        }
        let target_decomp = match spectrum {
            Some(s) => Some(decompose(target, s, sector_filter)?),
            None => None,
        };
        Ok(Self {
            hamiltonian,
            target,
            spectrum,
            fit,
            sector_filter,
            target_decomp,
        })
    }

    fn fit(&self, psi: &[C64]) -> Option<FitResult> {
        let spectrum = self.spectrum?;
        let d = decompose(psi, spectrum, self.sector_filter).ok()?;
        let mut fit = fit_efftemp(&d, &self.fit).ok()?;
        fit.mse = self
            .target_decomp
            .as_ref()
            .and_then(|t| mse_vs_target(&d, t).ok())
            .map(|m| m.mse);
        Some(fit)
    }

    pub fn record(&self, step: u64, loss: f64, psi: &[C64], wall_ms: u64) -> Result<TrainRecord> {
        Ok(TrainRecord {
            step,
            loss,
            energy: energy(psi, self.hamiltonian)?,
            infidelity: infidelity_vs(psi, self.target)?,
            fit: self.fit(psi),
            wall_ms,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: u64,
    pub loss: f64,
    pub energy: f64,
    pub infidelity: f64,
    pub fit: Option<FitResult>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrainStatus {
    Completed,
    /// L-BFGS stopped on a tolerance before the step budget.
    Converged { reason: LbfgsStatus },
    LineSearchFailed,
    NonFinite { step: u64, message: String },
}

impl TrainStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, TrainStatus::NonFinite { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub records: Vec<TrainRecord>,
    pub theta: Vec<f64>,
    pub final_step: u64,
    pub status: TrainStatus,
    pub snapshots: Vec<Snapshot>,
}

struct Eval {
    loss: f64,
    psi: Vec<C64>,
    grad: Vec<f64>,
}

fn evaluate(spec: &AnsatzSpec, objective: &Objective, theta: &[f64]) -> Result<Eval> {
    let psi = forward(spec, theta)?;
    let (loss, cot) = objective.value_and_cotangent(&psi)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    let grad = pullback(spec, theta, &cot)?;
    Ok(Eval { loss, psi, grad })
}

/// A recoverable numerical failure ends the run with a partial trajectory.
fn is_numerical(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_) | Error::ZeroVector(_) | Error::NoConvergence { .. })
}

struct Recorder<'m, 'a> {
    monitor: &'m Monitor<'a>,
    cfg: &'m TrainConfig,
    start: Instant,
    records: Vec<TrainRecord>,
    snapshots: Vec<Snapshot>,
}

impl Recorder<'_, '_> {
    fn observe(&mut self, step: u64, ev: &Eval, theta: &[f64], force: bool) -> Result<()> {
        if force || step % self.cfg.record_every == 0 {
            let wall = if self.cfg.record_wall_time {
                self.start.elapsed().as_millis() as u64
            } else {
                0
            };
            if self.records.last().is_none_or(|r| r.step < step) {
                self.records.push(self.monitor.record(step, ev.loss, &ev.psi, wall)?);
            }
        }
        if self.cfg.snapshot_steps.contains(&step) && self.snapshots.last().is_none_or(|s| s.step < step) {
            self.snapshots.push(Snapshot {
                step,
                theta: theta.to_vec(),
            });
        }
        Ok(())
    }
}

/// Runs `init_params → (gradient, optimizer step)*`, recording every
/// `record_every` steps plus step 0 and the final step.
pub fn train(spec: &AnsatzSpec, objective: &Objective, monitor: &Monitor, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.optimizer.validate()?;
    if cfg.record_every == 0 {
        return Err(invalid("record_every must be at least 1"));
    }
    if spec.dim() != monitor.hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            expected: monitor.hamiltonian.dim(),
            found: spec.dim(),
        });
    }
    let mut theta = init_params(spec, cfg.seed)?.values;
    let mut rec = Recorder {
        monitor,
        cfg,
        start: Instant::now(),
        records: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut step = 0u64;
    let fail = |step: u64, e: Error| TrainStatus::NonFinite {
        step,
        message: e.to_string(),
    };

    let mut ev = match evaluate(spec, objective, &theta) {
        Ok(ev) => ev,
        Err(e) if is_numerical(&e) => {
            return Ok(TrainOutcome {
                records: Vec::new(),
                theta,
                final_step: 0,
                status: fail(0, e),
                snapshots: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    rec.observe(0, &ev, &theta, true)?;

    let status = match cfg.optimizer {
        OptimizerConfig::Adam(adam) => {
            let mut state = AdamState::new(adam, theta.len());
            let mut status = TrainStatus::Completed;
            while step < cfg.total_steps {
                if let Err(e) = state.step(&mut theta, &ev.grad, step) {
                    status = fail(step, e);
                    break;
                }
                step += 1;
                match evaluate(spec, objective, &theta) {
                    Ok(next) => ev = next,
                    Err(e) if is_numerical(&e) => {
                        status = fail(step, e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
                rec.observe(step, &ev, &theta, step == cfg.total_steps)?;
            }
            status
        }
        OptimizerConfig::Lbfgs(mut lcfg) => {
            lcfg.max_iter = lcfg.max_iter.min(cfg.total_steps);
            let mut opt = Lbfgs::new(lcfg, theta.clone(), ev.loss, ev.grad.clone())?;
            let mut f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
                let e = evaluate(spec, objective, x)?;
                Ok((e.loss, e.grad))
            };
            let mut status = TrainStatus::Completed;
            while !opt.status.is_done() {
                match opt.step(&mut f) {
                    Ok(_) => {}
                    Err(e) if is_numerical(&e) => {
                        status = fail(step + 1, e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
                if opt.iterations == step {
                    break;
                }
                step = opt.iterations;
                theta.clone_from(&opt.theta);
                ev = evaluate(spec, objective, &theta)?;
                rec.observe(step, &ev, &theta, opt.status.is_done())?;
            }
            if !status.is_failure() {
                status = match opt.status {
                    LbfgsStatus::LineSearchFailed => TrainStatus::LineSearchFailed,
                    LbfgsStatus::GradTol | LbfgsStatus::ValueTol => TrainStatus::Converged { reason: opt.status },
                    _ => TrainStatus::Completed,
                };
            }
            status
        }
    };
    // The final state is always recorded, even after an early stop.
    if !status.is_failure() {
        rec.observe(step, &ev, &theta, true)?;
    }
    Ok(TrainOutcome {
        records: rec.records,
        theta,
        final_step: step,
        status,
        snapshots: rec.snapshots,
    })
}

/// First recorded step whose infidelity is below `threshold`.
pub fn steps_to_threshold(records: &[TrainRecord], threshold: f64) -> Option<u64> {
    records.iter().find(|r| r.infidelity < threshold).map(|r| r.step)
}
