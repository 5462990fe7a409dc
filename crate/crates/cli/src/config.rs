//! Experiment configuration: a closed TOML schema plus named presets.
//!
//! Loading merges presets (in order) under the user file, then [`resolve`]
//! fills every table default so the snapshot written next to a run states
//! the exact hyperparameters used.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use efftemp::ansatz::{AnsatzSpec, Variant};
use efftemp::model::{Lattice, LatticeKind, XxzParams, DEFAULT_DIM_CAP};
use efftemp::optimize::defaults::{table_adam, table_ites_steps};
use efftemp::optimize::{AdamConfig, LbfgsConfig, OptimizerConfig, Schedule, ScheduleKind, TrainConfig};
use efftemp::spectral::{FitOptions, SectorFilter, DEFAULT_BETA_STAR_REL_DEV, DEFAULT_DEGENERACY_REL_TOL};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub ansatz: AnsatzBlock,
    pub objective: ObjectiveBlock,
    #[serde(default)]
    pub optimizer: OptimizerBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub lattice: LatticeKind,
    pub lx: usize,
    #[serde(default = "one")]
    pub ly: usize,
    #[serde(default = "yes")]
    pub pbc: bool,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    /// Uniform field, used when `h` is absent.
    #[serde(default)]
    pub hz: f64,
    /// Per-site fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    /// Block-diagonalize by magnetization; defaults to on when Jx == Jy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sectors: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Mps,
    Peps,
    Nqs,
    Vqe,
    Vec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzBlock {
    pub kind: AnsatzKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// NQS width as a multiple of the site count; resolved into `width`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_per_site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Energy,
    Fidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetChoice {
    #[default]
    Ground,
    Ites,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveBlock {
    pub kind: ObjectiveKind,
    #[serde(default)]
    pub target: TargetChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Lbfgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    Constant,
    ExpHalving,
    WarmThenConstant,
}

/// Unset Adam fields fall back to the per-ansatz table row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerBlock {
    #[serde(default)]
    pub kind: OptimizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    /// Required for ground-state targets; ITES runs default to the table budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    pub record_every: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Steps with a scatter export besides the final one.
    pub scatter_steps: Vec<u64>,
    /// Steps with a parameter checkpoint besides the final one.
    pub checkpoint_steps: Vec<u64>,
    pub record_wall_time: bool,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            steps: None,
            record_every: 25,
            seed: 0,
            out: None,
            scatter_steps: Vec::new(),
            checkpoint_steps: Vec::new(),
            record_wall_time: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    pub exclude_ground: bool,
    pub weight_floor: f64,
    pub aggregate: bool,
    pub degeneracy_rel_tol: f64,
    /// Restrict decompositions to one magnetization sector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<i32>,
    pub renormalize_sector: bool,
    pub beta_star_rel_dev: f64,
    /// Infidelity threshold of the steps-to-threshold metric.
    pub threshold: f64,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            exclude_ground: true,
            weight_floor: 0.0,
            aggregate: true,
            degeneracy_rel_tol: DEFAULT_DEGENERACY_REL_TOL,
            sector: None,
            renormalize_sector: false,
            beta_star_rel_dev: DEFAULT_BETA_STAR_REL_DEV,
            threshold: 1e-7,
        }
    }
}

impl AnalysisBlock {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            exclude_ground: self.exclude_ground,
            weight_floor: self.weight_floor,
            aggregate: self.aggregate,
            degeneracy_rel_tol: self.degeneracy_rel_tol,
        }
    }

    pub fn sector_filter(&self) -> Option<SectorFilter> {
        self.sector.map(|m| SectorFilter {
            m,
            renormalize: self.renormalize_sector,
        })
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "xxz-4x3",
    "xxz-chain-12",
    "mps-table",
    "peps-table",
    "nqs-table",
    "vqe-table",
    "vec-table",
];

/// Partial configs; several may be layered, later ones winning.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "xxz-4x3" => {
            "[model]\nlattice = \"square\"\nlx = 4\nly = 3\npbc = true\njx = 1.0\njy = 1.0\njz = 0.8\nhz = 0.0\n"
        }
        "xxz-chain-12" => {
            "[model]\nlattice = \"chain\"\nlx = 12\npbc = true\njx = 1.0\njy = 1.0\njz = 0.8\nhz = 0.02\n"
        }
        "mps-table" => {
            "[ansatz]\nkind = \"mps\"\nchi = 32\n\n[optimizer]\nkind = \"adam\"\nlr0 = 3e-3\nschedule = \"exp_halving\"\nperiod = 1000\n"
        }
        "peps-table" => {
            "[ansatz]\nkind = \"peps\"\nchi = 4\n\n[optimizer]\nkind = \"adam\"\nlr0 = 8e-3\nschedule = \"constant\"\n"
        }
        "nqs-table" => {
            "[ansatz]\nkind = \"nqs\"\nwidth_per_site = 4\ndepth = 2\n\n[optimizer]\nkind = \"adam\"\nlr0 = 1e-3\nschedule = \"warm_then_constant\"\nperiod = 200\nwarm_steps = 800\n"
        }
        "vqe-table" => {
            "[ansatz]\nkind = \"vqe\"\ndepth = 6\n\n[optimizer]\nkind = \"adam\"\nlr0 = 1e-2\nschedule = \"exp_halving\"\nperiod = 2000\n"
        }
        "vec-table" => {
            "[ansatz]\nkind = \"vec\"\n\n[optimizer]\nkind = \"adam\"\nlr0 = 2e-3\nschedule = \"constant\"\n"
        }
        _ => return None,
    })
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str, origin: &str) -> CliResult<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Validation(format!("{origin}: {e}")))
}

/// Layers the named presets and then the user text, and checks the schema.
fn layer(presets: &[String], user: Option<&str>) -> CliResult<toml::Table> {
    let mut table = toml::Table::new();
    for name in presets {
        let text = preset(name).ok_or_else(|| {
            CliError::Validation(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
        })?;
        merge(&mut table, parse_table(text, name)?);
    }
    if let Some(text) = user {
        merge(&mut table, parse_table(text, "config")?);
    }
    Ok(table)
}

/// Layers the named presets and then the user text, and checks the schema.
pub fn compose(presets: &[String], user: Option<&str>) -> CliResult<ExperimentConfig> {
    let table = layer(presets, user)?;
    ExperimentConfig::deserialize(table).map_err(|e| CliError::Validation(e.to_string()))
}

fn layered(path: Option<&Path>, presets: &[String]) -> CliResult<toml::Table> {
    let text = match path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(CliError::io(p))?),
        None => None,
    };
    if text.is_none() && presets.is_empty() {
        return Err(CliError::Validation("give --config and/or --preset".into()));
    }
    layer(presets, text.as_deref())
}

/// Parses one complete config document; the fuzzing entry point.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    compose(&[], Some(text))
}

pub fn load(path: Option<&Path>, presets: &[String]) -> CliResult<ExperimentConfig> {
    ExperimentConfig::deserialize(layered(path, presets)?).map_err(|e| CliError::Validation(e.to_string()))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl ModelBlock {
    pub fn lattice(&self) -> CliResult<Lattice> {
        Ok(Lattice::build(self.lattice, self.lx, self.ly, self.pbc)?)
    }

    pub fn params(&self) -> CliResult<XxzParams> {
        let sites = self.lx.saturating_mul(self.ly);
        let h = match &self.h {
            Some(h) if self.hz != 0.0 => {
                return Err(bad(format!("give either hz or h, not both (hz = {}, h = {h:?})", self.hz)))
            }
            Some(h) => h.clone(),
            None => vec![self.hz; sites],
        };
        Ok(XxzParams {
            jx: self.jx,
            jy: self.jy,
            jz: self.jz,
            h,
        })
    }

    pub fn use_sectors(&self) -> bool {
        self.sectors.unwrap_or(self.jx == self.jy)
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap.unwrap_or(DEFAULT_DIM_CAP)
    }

    /// Validates the block and fills the sector and cap defaults.
    pub fn resolve(mut self) -> CliResult<Self> {
        let lattice = self.lattice()?;
        let params = self.params()?;
        if params.h.len() != lattice.sites() {
            return Err(bad(format!("h has {} entries for {} sites", params.h.len(), lattice.sites())));
        }
        if ![params.jx, params.jy, params.jz].iter().chain(&params.h).all(|v| v.is_finite()) {
            return Err(bad("couplings must be finite"));
        }
        if self.sectors == Some(true) && !params.conserves_sz() {
            return Err(bad(format!(
                "sector mode needs Jx == Jy (got Jx = {}, Jy = {}); set sectors = false",
                params.jx, params.jy
            )));
        }
        self.sectors = Some(self.use_sectors());
        self.dim_cap = Some(self.dim_cap());
        Ok(self)
    }
}

/// Reads only the `[model]` block of the layered presets and file.
pub fn load_model(path: Option<&Path>, presets: &[String]) -> CliResult<ModelBlock> {
    let table = layered(path, presets)?;
    let model = table.get("model").cloned().ok_or_else(|| bad("config has no [model] block"))?;
    ModelBlock::deserialize(model)
        .map_err(|e| bad(format!("model: {e}")))?
        .resolve()
}

impl ExperimentConfig {
    pub fn lattice(&self) -> CliResult<Lattice> {
        self.model.lattice()
    }

    pub fn variant(&self) -> CliResult<Variant> {
        let a = &self.ansatz;
        let sites = self.model.lx.saturating_mul(self.model.ly);
        let need = |v: Option<usize>, what: &str| v.ok_or_else(|| bad(format!("{:?} ansatz needs {what}", a.kind)));
        let unused = |fields: &[(&str, bool)]| -> CliResult<()> {
            match fields.iter().find(|f| f.1) {
                Some((name, _)) => Err(bad(format!("{name} does not apply to the {:?} ansatz", a.kind))),
                None => Ok(()),
            }
        };
        let (chi, width, wps, depth) = (a.chi.is_some(), a.width.is_some(), a.width_per_site.is_some(), a.depth.is_some());
        Ok(match a.kind {
            AnsatzKind::Mps | AnsatzKind::Peps => {
                unused(&[("width", width), ("width_per_site", wps), ("depth", depth)])?;
                let chi = need(a.chi, "chi")?;
                if a.kind == AnsatzKind::Mps {
                    Variant::Mps { chi }
                } else {
                    Variant::Peps { chi }
                }
            }
            AnsatzKind::Nqs => {
                unused(&[("chi", chi)])?;
                let width = match (a.width, a.width_per_site) {
                    (Some(_), Some(_)) => return Err(bad("give either width or width_per_site")),
                    (Some(w), None) => w,
                    (None, Some(k)) => k.checked_mul(sites).ok_or_else(|| bad("NQS width overflows"))?,
                    (None, None) => return Err(bad("Nqs ansatz needs width or width_per_site")),
                };
                Variant::Nqs {
                    width,
                    depth: need(a.depth, "depth")?,
                }
            }
            AnsatzKind::Vqe => {
                unused(&[("chi", chi), ("width", width), ("width_per_site", wps)])?;
                Variant::Vqe {
                    depth: need(a.depth, "depth")?,
                }
            }
            AnsatzKind::Vec => {
                unused(&[("chi", chi), ("width", width), ("width_per_site", wps), ("depth", depth)])?;
                Variant::Vec
            }
        })
    }

    pub fn ansatz_spec(&self) -> CliResult<AnsatzSpec> {
        Ok(AnsatzSpec::new(self.variant()?, self.lattice()?)?)
    }

    /// β values this config asks for: the grid, else the single β, else none.
    pub fn beta_grid(&self) -> Option<Vec<f64>> {
        match (&self.objective.beta_grid, self.objective.beta) {
            (Some(g), _) => Some(g.clone()),
            (None, Some(b)) => Some(vec![b]),
            (None, None) => None,
        }
    }

    pub fn optimizer_config(&self) -> CliResult<OptimizerConfig> {
        let o = &self.optimizer;
        let cfg = match o.kind {
            OptimizerKind::Adam => {
                if o.memory.is_some() || o.value_tol.is_some() || o.grad_tol.is_some() || o.max_iter.is_some() {
                    return Err(bad("memory, value_tol, grad_tol and max_iter are L-BFGS settings"));
                }
                let mut adam = table_adam(&self.variant()?);
                if let Some(name) = o.schedule {
                    adam.schedule.kind = match name {
                        ScheduleName::Constant => ScheduleKind::Constant,
                        ScheduleName::ExpHalving => ScheduleKind::ExpHalving {
                            period: o.period.ok_or_else(|| bad("exp_halving needs period"))?,
                        },
                        ScheduleName::WarmThenConstant => ScheduleKind::WarmThenConstant {
                            period: o.period.ok_or_else(|| bad("warm_then_constant needs period"))?,
                            warm_steps: o.warm_steps.ok_or_else(|| bad("warm_then_constant needs warm_steps"))?,
                        },
                    };
                    if name == ScheduleName::Constant && o.period.is_some() {
                        return Err(bad("a constant schedule takes no period"));
                    }
                    if name != ScheduleName::WarmThenConstant && o.warm_steps.is_some() {
                        return Err(bad("warm_steps belongs to warm_then_constant"));
                    }
                } else if o.period.is_some() || o.warm_steps.is_some() {
                    return Err(bad("period/warm_steps need an explicit schedule"));
                }
                if let Some(lr) = o.lr0 {
                    adam.schedule.lr0 = lr;
                }
                adam.beta1 = o.beta1.unwrap_or(adam.beta1);
                adam.beta2 = o.beta2.unwrap_or(adam.beta2);
                adam.eps = o.eps.unwrap_or(adam.eps);
                OptimizerConfig::Adam(adam)
            }
            OptimizerKind::Lbfgs => {
                if o.lr0.is_some() || o.schedule.is_some() || o.beta1.is_some() || o.beta2.is_some() || o.eps.is_some() {
                    return Err(bad("learning-rate and moment settings are Adam settings"));
                }
                let d = LbfgsConfig::default();
                OptimizerConfig::Lbfgs(LbfgsConfig {
                    memory: o.memory.unwrap_or(d.memory),
                    value_tol: o.value_tol.unwrap_or(d.value_tol),
                    grad_tol: o.grad_tol.unwrap_or(d.grad_tol),
                    max_iter: o.max_iter.unwrap_or(d.max_iter),
                })
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> CliResult<TrainConfig> {
        let steps = self.run.steps.ok_or_else(|| bad("run.steps is unresolved"))?;
        let mut cfg = TrainConfig::new(self.optimizer_config()?, steps, self.run.seed);
        cfg.record_every = self.run.record_every;
        cfg.record_wall_time = self.run.record_wall_time;
        cfg.snapshot_steps = self.export_steps();
        Ok(cfg)
    }

    /// Steps at which parameters are kept for scatter exports or checkpoints.
    pub fn export_steps(&self) -> BTreeSet<u64> {
        let mut s: BTreeSet<u64> = self.run.scatter_steps.iter().chain(&self.run.checkpoint_steps).copied().collect();
        if let Some(n) = self.run.steps {
            s.insert(n);
            s.retain(|&k| k <= n);
        }
        s
    }
}

fn check_beta(b: f64) -> CliResult<()> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(bad(format!("β must be finite and ≥ 0, got {b}")))
    }
}

/// Validates the whole config and writes every default back into it.
pub fn resolve(mut cfg: ExperimentConfig) -> CliResult<ExperimentConfig> {
    cfg.model = cfg.model.resolve()?;
    let lattice = cfg.model.lattice()?;

    let variant = cfg.variant()?;
    if let Variant::Nqs { width, .. } = variant {
        cfg.ansatz.width = Some(width);
        cfg.ansatz.width_per_site = None;
    }
    AnsatzSpec::new(variant, lattice.clone())?;

    let obj = &cfg.objective;
    match (obj.kind, obj.target) {
        (ObjectiveKind::Energy, TargetChoice::Ites) => {
            return Err(bad("the energy objective targets the ground state"));
        }
        (_, TargetChoice::Ground) if obj.beta.is_some() || obj.beta_grid.is_some() || obj.phase_seed.is_some() => {
            return Err(bad("beta, beta_grid and phase_seed need target = \"ites\""));
        }
        (_, TargetChoice::Ites) => {
            if obj.beta.is_some() && obj.beta_grid.is_some() {
                return Err(bad("give either beta or beta_grid"));
            }
            let grid = cfg.beta_grid().ok_or_else(|| bad("an ITES target needs beta or beta_grid"))?;
            if grid.is_empty() {
                return Err(bad("beta_grid is empty"));
            }
            for &b in &grid {
                check_beta(b)?;
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("beta_grid must be strictly increasing"));
            }
        }
        _ => {}
    }

    let opt = cfg.optimizer_config()?;
    let o = &mut cfg.optimizer;
    match opt {
        OptimizerConfig::Adam(AdamConfig {
            beta1,
            beta2,
            eps,
            schedule: Schedule { lr0, kind },
        }) => {
            o.lr0 = Some(lr0);
            (o.schedule, o.period, o.warm_steps) = match kind {
                ScheduleKind::Constant => (Some(ScheduleName::Constant), None, None),
                ScheduleKind::ExpHalving { period } => (Some(ScheduleName::ExpHalving), Some(period), None),
                ScheduleKind::WarmThenConstant { period, warm_steps } => {
                    (Some(ScheduleName::WarmThenConstant), Some(period), Some(warm_steps))
                }
            };
            (o.beta1, o.beta2, o.eps) = (Some(beta1), Some(beta2), Some(eps));
        }
        OptimizerConfig::Lbfgs(l) => {
            o.memory = Some(l.memory);
            o.value_tol = Some(l.value_tol);
            o.grad_tol = Some(l.grad_tol);
            o.max_iter = Some(l.max_iter);
        }
    }

    if cfg.run.steps.is_none() {
        if cfg.objective.target == TargetChoice::Ites {
            cfg.run.steps = Some(table_ites_steps(&variant));
        } else {
            return Err(bad("run.steps is required for ground-state runs"));
        }
    }
    if cfg.run.record_every == 0 {
        return Err(bad("run.record_every must be at least 1"));
    }
    cfg.run.scatter_steps.sort_unstable();
    cfg.run.scatter_steps.dedup();
    cfg.run.checkpoint_steps.sort_unstable();
    cfg.run.checkpoint_steps.dedup();

    let a = &cfg.analysis;
    if !(a.weight_floor >= 0.0 && a.weight_floor.is_finite()) {
        return Err(bad("analysis.weight_floor must be finite and ≥ 0"));
    }
    if !(a.degeneracy_rel_tol >= 0.0 && a.degeneracy_rel_tol.is_finite()) {
        return Err(bad("analysis.degeneracy_rel_tol must be finite and ≥ 0"));
    }
    if !(a.beta_star_rel_dev > 0.0 && a.beta_star_rel_dev.is_finite()) {
        return Err(bad("analysis.beta_star_rel_dev must be positive"));
    }
    if !(a.threshold > 0.0 && a.threshold <= 1.0) {
        return Err(bad("analysis.threshold must lie in (0, 1]"));
    }
    if a.renormalize_sector && a.sector.is_none() {
        return Err(bad("renormalize_sector needs a sector"));
    }
    if let Some(m) = a.sector {
        let l = lattice.sites() as i32;
        if m.abs() > l || (l - m) % 2 != 0 {
            return Err(bad(format!("no magnetization sector {m} on {l} sites")));
        }
    }
    Ok(cfg)
}

/// Canonical text of a resolved config.
pub fn snapshot(cfg: &ExperimentConfig) -> CliResult<String> {
    toml::to_string(cfg).map_err(|e| CliError::Validation(format!("cannot serialize config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
lattice = "chain"
lx = 6
jx = 1.0
jy = 1.0
jz = 0.8

[ansatz]
kind = "mps"
chi = 4

[objective]
kind = "fidelity"
target = "ites"
beta = 0.3
"#;

    #[test]
    fn table_defaults_fill_in() {
        let cfg = resolve(parse_config(BASE).unwrap()).unwrap();
        assert_eq!(cfg.run.steps, Some(400));
        assert_eq!(cfg.optimizer.lr0, Some(3e-3));
        assert_eq!(cfg.optimizer.schedule, Some(ScheduleName::ExpHalving));
        assert_eq!(cfg.optimizer.period, Some(1000));
        assert_eq!(cfg.model.sectors, Some(true));
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = resolve(parse_config(BASE).unwrap()).unwrap();
        let text = snapshot(&cfg).unwrap();
        let again = resolve(parse_config(&text).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(snapshot(&again).unwrap(), text);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config(&format!("{BASE}\n[run]\nstepz = 3\n")).is_err());
        assert!(parse_config(&BASE.replace("chi = 4", "chi = 4\nbond = 2")).is_err());
        assert!(parse_config(&format!("{BASE}\n[extra]\nx = 1\n")).is_err());
    }

    #[test]
    fn presets_layer_under_the_file() {
        let user = "[objective]\nkind = \"fidelity\"\ntarget = \"ites\"\nbeta = 0.5\n\n[ansatz]\nchi = 8\n";
        let cfg = compose(&["xxz-4x3".into(), "mps-table".into()], Some(user)).unwrap();
        let cfg = resolve(cfg).unwrap();
        assert_eq!(cfg.variant().unwrap(), Variant::Mps { chi: 8 });
        assert_eq!((cfg.model.lx, cfg.model.ly), (4, 3));
        assert!(compose(&["nope".into()], None).is_err());
    }

    #[test]
    fn presets_match_the_table() {
        for (name, kind) in [
            ("mps-table", AnsatzKind::Mps),
            ("peps-table", AnsatzKind::Peps),
            ("nqs-table", AnsatzKind::Nqs),
            ("vqe-table", AnsatzKind::Vqe),
            ("vec-table", AnsatzKind::Vec),
        ] {
            let user = "[objective]\nkind = \"fidelity\"\ntarget = \"ites\"\nbeta = 0.3\n";
            let cfg = compose(&["xxz-4x3".into(), name.into()], Some(user)).unwrap();
            assert_eq!(cfg.ansatz.kind, kind);
            let explicit = cfg.optimizer_config().unwrap();
            let OptimizerConfig::Adam(table) = explicit else { panic!() };
            assert_eq!(table, table_adam(&cfg.variant().unwrap()), "{name}");
            let resolved = resolve(cfg).unwrap();
            assert_eq!(resolved.run.steps, Some(table_ites_steps(&resolved.variant().unwrap())));
        }
    }

    #[test]
    fn invalid_combinations() {
        let energy_ites = BASE.replace("kind = \"fidelity\"", "kind = \"energy\"");
        assert!(resolve(parse_config(&energy_ites).unwrap()).is_err());
        let ground_no_steps = BASE.replace("target = \"ites\"\nbeta = 0.3\n", "");
        assert!(resolve(parse_config(&ground_no_steps).unwrap()).is_err());
        let sectors_anisotropic = BASE.replace("jy = 1.0", "jy = 0.5\nsectors = true");
        assert!(resolve(parse_config(&sectors_anisotropic).unwrap()).is_err());
        let unsorted = BASE.replace("beta = 0.3", "beta_grid = [0.3, 0.1]");
        assert!(resolve(parse_config(&unsorted).unwrap()).is_err());
        let stray = BASE.replace("chi = 4", "chi = 4\ndepth = 2");
        assert!(resolve(parse_config(&stray).unwrap()).is_err());
        let both_fields = BASE.replace("jz = 0.8", "jz = 0.8\nhz = 0.1\nh = [0,0,0,0,0,0]");
        assert!(resolve(parse_config(&both_fields).unwrap()).is_err());
    }

    #[test]
    fn anisotropic_defaults_to_full_space() {
        let cfg = resolve(parse_config(&BASE.replace("jy = 1.0", "jy = 0.5")).unwrap()).unwrap();
        assert_eq!(cfg.model.sectors, Some(false));
    }
}
