//! Subcommand bodies. Each returns the exit code and a report for stdout.

use std::path::{Path, PathBuf};

use efftemp::ansatz::{init_params, param_count};
use efftemp::autodiff::{fd_check, FdCoord, FdOptions};
use efftemp::model::{ground_state, sz_sectors};
use serde::Serialize;

use crate::config::{self, ExperimentConfig, ModelBlock, TargetChoice};
use crate::error::{CliError, CliResult};
use crate::manifest::to_json;
use crate::pipeline::{execute_run, objective_for, prepare_model, target_for, ModelContext, RunSummary};
use crate::report::{build_report, ReportSummary};
use crate::sweep::execute_sweep;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 3;

/// Maximum relative error accepted by `gradcheck`.
pub const GRADCHECK_RTOL: f64 = 1e-5;

pub struct Done {
    pub exit: i32,
    pub stdout: String,
}

fn done<T: Serialize>(exit: i32, value: &T) -> CliResult<Done> {
    let stdout = String::from_utf8(to_json(value)?).expect("serde_json emits UTF-8");
    Ok(Done { exit, stdout })
}

/// `--out` wins over `run.out`.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> CliResult<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.run.out.clone())
        .ok_or_else(|| CliError::Validation("no output directory: pass --out or set run.out".into()))
}

/// Loads, applies the seed override and resolves.
pub fn load_config(path: Option<&Path>, presets: &[String], seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut cfg = config::load(path, presets)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    config::resolve(cfg)
}

#[derive(Serialize)]
pub struct EdSummary {
    pub cache_path: String,
    pub cache_key: String,
    pub cache_hit: bool,
    pub sites: usize,
    pub dim: usize,
    pub sectored: bool,
    /// `(m, dimension)` of every block.
    pub blocks: Vec<(Option<i32>, usize)>,
    pub ground_energy: f64,
    pub gap: f64,
    pub warning: Option<String>,
}

pub fn ed_summary(ctx: &ModelContext) -> EdSummary {
    let g = ground_state(&ctx.spectrum, 1e-8);
    EdSummary {
        cache_path: ctx.cache_path.display().to_string(),
        cache_key: ctx.cache_key.clone(),
        cache_hit: ctx.cache_hit,
        sites: ctx.spectrum.sites(),
        dim: ctx.spectrum.dim(),
        sectored: ctx.spectrum.is_sectored(),
        blocks: ctx.spectrum.blocks().iter().map(|b| (b.m, b.indices.len())).collect(),
        ground_energy: g.energy,
        gap: g.gap,
        warning: g.warning(),
    }
}

pub fn cmd_ed(model: &ModelBlock, cache: &Path, out: Option<&Path>) -> CliResult<Done> {
    let ctx = prepare_model(model, cache)?;
    let summary = ed_summary(&ctx);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        crate::csvio::write_file(&dir.join("ed.summary.json"), &to_json(&summary)?)?;
    }
    done(EXIT_OK, &summary)
}

/// Sector dimensions for the cap message without diagonalizing anything.
pub fn sector_dims(sites: usize) -> Vec<(i32, usize)> {
    sz_sectors(sites).into_iter().map(|s| (s.m, s.indices.len())).collect()
}

pub fn cmd_train(cfg: &ExperimentConfig, cache: &Path, out: &Path) -> CliResult<(Done, RunSummary)> {
    if cfg.objective.beta_grid.is_some() {
        return Err(CliError::Validation("train takes a single beta; use ites-sweep for a grid".into()));
    }
    let ctx = prepare_model(&cfg.model, cache)?;
    let summary = execute_run(cfg, &ctx, out)?;
    let exit = if summary.failed() { EXIT_NUMERICAL } else { EXIT_OK };
    Ok((done(exit, &summary)?, summary))
}

#[derive(Serialize)]
pub struct SweepSummary<'a> {
    pub out: String,
    pub beta_star: Option<f64>,
    pub points: &'a [efftemp::spectral::SweepPoint],
}

pub fn cmd_sweep(cfg: &ExperimentConfig, cache: &Path, out: &Path, jobs: usize) -> CliResult<Done> {
    let ctx = prepare_model(&cfg.model, cache)?;
    let outcome = execute_sweep(cfg, &ctx, out, jobs)?;
    let exit = if outcome.any_failed() { EXIT_NUMERICAL } else { EXIT_OK };
    done(
        exit,
        &SweepSummary {
            out: out.display().to_string(),
            beta_star: outcome.result.beta_star,
            points: &outcome.result.points,
        },
    )
}

pub fn cmd_report(inputs: &[PathBuf], out: &Path, cache: &Path) -> CliResult<(Done, ReportSummary)> {
    let summary = build_report(inputs, out, cache)?;
    Ok((done(EXIT_OK, &summary)?, summary))
}

#[derive(Serialize)]
pub struct GradcheckReport {
    pub ansatz: String,
    pub objective: &'static str,
    pub parameters: usize,
    pub seed: u64,
    pub value: f64,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub passed: bool,
    pub coords: Vec<FdCoord>,
}

pub fn gradcheck(cfg: &ExperimentConfig, ctx: &ModelContext) -> CliResult<GradcheckReport> {
    let spec = cfg.ansatz_spec()?;
    let beta = match cfg.objective.target {
        TargetChoice::Ites => Some(match (&cfg.objective.beta_grid, cfg.objective.beta) {
            (None, Some(b)) => b,
            _ => return Err(CliError::Validation("gradcheck takes a single beta".into())),
        }),
        TargetChoice::Ground => None,
    };
    let target = target_for(cfg, ctx, beta)?;
    let objective = objective_for(cfg, ctx, &target);
    let theta = init_params(&spec, cfg.run.seed)?;
    let opts = FdOptions {
        seed: cfg.run.seed,
        ..FdOptions::default()
    };
    let check = fd_check(&spec, &theta, &objective, opts)?;
    let value = efftemp::autodiff::objective_value(&spec, &theta, &objective)?;
    Ok(GradcheckReport {
        ansatz: spec.variant.name().into(),
        objective: objective.name(),
        parameters: param_count(&spec),
        seed: cfg.run.seed,
        value,
        tolerance: GRADCHECK_RTOL,
        max_rel_error: check.max_rel_error,
        passed: check.max_rel_error < GRADCHECK_RTOL,
        coords: check.coords,
    })
}

pub fn cmd_gradcheck(cfg: &ExperimentConfig, cache: &Path, out: Option<&Path>) -> CliResult<Done> {
    let ctx = prepare_model(&cfg.model, cache)?;
    let report = gradcheck(cfg, &ctx)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        crate::csvio::write_file(&dir.join("gradcheck.json"), &to_json(&report)?)?;
    }
    done(if report.passed { EXIT_OK } else { EXIT_NUMERICAL }, &report)
}
