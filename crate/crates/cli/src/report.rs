//! Consolidated, plot-ready tables over verified run and sweep directories.

use std::path::{Path, PathBuf};

use efftemp::spectral::{entanglement_entropy, SweepResult};
use serde::Serialize;

use crate::config::{ExperimentConfig, ObjectiveKind, TargetChoice};
use crate::csvio::{parse_trajectory, read_file, to_csv, write_file, TrajectoryRow};
use crate::error::{CliError, CliResult};
use crate::manifest::{to_json, verify_dir, ManifestKind};
use crate::pipeline::{prepare_model, target_for, RunSummary, SUMMARY_FILE, TRAJECTORY_FILE};
use crate::sweep::{run_dir_name, SWEEP_JSON};

/// Slack on the variational bound `E ≥ ε₀`.
pub const VARIATIONAL_TOL: f64 = 1e-9;

struct LoadedRun {
    id: String,
    summary: RunSummary,
    trajectory: Vec<TrajectoryRow>,
}

struct LoadedSweep {
    id: String,
    config: ExperimentConfig,
    result: SweepResult,
    cache_key: String,
}

#[derive(Serialize)]
struct RunsRow<'a> {
    run_id: &'a str,
    ansatz: &'a str,
    objective: ObjectiveKind,
    target: TargetChoice,
    beta: Option<f64>,
    seed: u64,
    steps: u64,
    final_step: u64,
    failed: bool,
    ground_energy: f64,
    energy: f64,
    infidelity: f64,
    beta_tilde: Option<f64>,
    delta_beta_tilde: Option<f64>,
    lambda: Option<f64>,
    r_squared: Option<f64>,
    mse: Option<f64>,
    beta_tilde_peak_step: Option<u64>,
    min_recorded_energy: f64,
    variational_bound_ok: bool,
    steps_to_threshold: Option<u64>,
}

const RUNS_HEADER: [&str; 21] = [
    "run_id",
    "ansatz",
    "objective",
    "target",
    "beta",
    "seed",
    "steps",
    "final_step",
    "failed",
    "ground_energy",
    "energy",
    "infidelity",
    "beta_tilde",
    "delta_beta_tilde",
    "lambda",
    "r_squared",
    "mse",
    "beta_tilde_peak_step",
    "min_recorded_energy",
    "variational_bound_ok",
    "steps_to_threshold",
];

#[derive(Serialize)]
struct SeriesRow<'a> {
    run_id: &'a str,
    step: u64,
    loss: f64,
    energy: f64,
    infidelity: f64,
    beta_tilde: Option<f64>,
    delta_beta_tilde: Option<f64>,
    lambda: Option<f64>,
    r_squared: Option<f64>,
    mse: Option<f64>,
    wall_ms: u64,
}

const SERIES_HEADER: [&str; 11] = [
    "run_id",
    "step",
    "loss",
    "energy",
    "infidelity",
    "beta_tilde",
    "delta_beta_tilde",
    "lambda",
    "r_squared",
    "mse",
    "wall_ms",
];

#[derive(Serialize)]
struct EntropyRow<'a> {
    sweep_id: &'a str,
    beta: f64,
    entropy: f64,
}

#[derive(Serialize)]
struct ThresholdRow<'a> {
    run_id: &'a str,
    ansatz: &'a str,
    beta: Option<f64>,
    threshold: f64,
    steps: Option<u64>,
}

#[derive(Serialize)]
struct LambdaRow<'a> {
    run_id: &'a str,
    step: u64,
    lambda: f64,
    infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub sweep_id: String,
    pub beta_star: Option<f64>,
    pub rel_dev: f64,
    pub grid: Vec<f64>,
    pub failed_betas: Vec<f64>,
    /// Half-cut entanglement entropy of each ITES target.
    pub target_entropy: Vec<f64>,
    pub entropy_non_increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportSummary {
    pub inputs: Vec<String>,
    pub runs: usize,
    pub failed_runs: Vec<String>,
    pub sweeps: Vec<SweepReport>,
    pub variational_bound_ok: bool,
}

pub const REPORT_FILES: [&str; 6] = [
    "runs.csv",
    "series.csv",
    "entropy.csv",
    "steps_to_threshold.csv",
    "lambda_infidelity.csv",
    "report.json",
];

fn load_run(dir: &Path, id: String) -> CliResult<LoadedRun> {
    let summary: RunSummary = serde_json::from_slice(&read_file(&dir.join(SUMMARY_FILE))?)
        .map_err(|e| CliError::Integrity(format!("{id}: malformed summary: {e}")))?;
    let trajectory = parse_trajectory(&read_file(&dir.join(TRAJECTORY_FILE))?)
        .map_err(|e| CliError::Integrity(format!("{id}: {e}")))?;
    Ok(LoadedRun { id, summary, trajectory })
}

/// Verifies every input, then writes the report tables into `out`.
pub fn build_report(inputs: &[PathBuf], out: &Path, cache: &Path) -> CliResult<ReportSummary> {
    if inputs.is_empty() {
        return Err(CliError::Validation("report needs at least one run or sweep directory".into()));
    }
    let mut runs = Vec::new();
    let mut sweeps = Vec::new();
    for dir in inputs {
        let id = dir.display().to_string();
        let (manifest, integrity) = verify_dir(dir)?;
        if !integrity.is_clean() {
            return Err(CliError::Integrity(format!("{id}: {}", integrity.describe())));
        }
        match manifest.kind {
            ManifestKind::Run => runs.push(load_run(dir, id)?),
            ManifestKind::Sweep => {
                let result: SweepResult = serde_json::from_slice(&read_file(&dir.join(SWEEP_JSON))?)
                    .map_err(|e| CliError::Integrity(format!("{id}: malformed sweep result: {e}")))?;
                for (i, _) in result.points.iter().enumerate() {
                    let sub = dir.join(run_dir_name(i));
                    if sub.join(SUMMARY_FILE).exists() {
                        runs.push(load_run(&sub, format!("{id}/{}", run_dir_name(i)))?);
                    }
                }
                sweeps.push(LoadedSweep {
                    id,
                    config: manifest.config,
                    result,
                    cache_key: manifest.spectrum_cache_key,
                });
            }
            ManifestKind::Ed => {
                return Err(CliError::Validation(format!("{id} is not a run or sweep directory")));
            }
        }
    }

    let mut sweep_reports = Vec::new();
    let mut entropy_rows = Vec::new();
    for s in &sweeps {
        let ctx = prepare_model(&s.config.model, cache)?;
        if ctx.cache_key != s.cache_key {
            return Err(CliError::Integrity(format!("{}: spectrum key differs from the manifest", s.id)));
        }
        let left = ctx.lattice.sites() / 2;
        let grid: Vec<f64> = s.result.points.iter().map(|p| p.beta).collect();
        let mut entropy = Vec::with_capacity(grid.len());
        for &b in &grid {
            let target = target_for(&s.config, &ctx, Some(b))?;
            let e = entanglement_entropy(&target.state, left)?;
            entropy.push(e);
            entropy_rows.push(EntropyRow {
                sweep_id: &s.id,
                beta: b,
                entropy: e,
            });
        }
        sweep_reports.push(SweepReport {
            sweep_id: s.id.clone(),
            beta_star: s.result.beta_star,
            rel_dev: s.result.rel_dev,
            failed_betas: s.result.points.iter().filter(|p| p.error.is_some()).map(|p| p.beta).collect(),
            entropy_non_increasing: entropy.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            target_entropy: entropy,
            grid,
        });
    }

    let bound_ok = |r: &LoadedRun| r.summary.min_recorded_energy >= r.summary.ground_energy - VARIATIONAL_TOL;
    let runs_rows: Vec<RunsRow> = runs
        .iter()
        .map(|r| {
            let s = &r.summary;
            let f = &s.final_record;
            RunsRow {
                run_id: &r.id,
                ansatz: &s.ansatz,
                objective: s.objective,
                target: s.target,
                beta: s.beta,
                seed: s.seed,
                steps: s.steps,
                final_step: s.final_step,
                failed: s.failed(),
                ground_energy: s.ground_energy,
                energy: f.energy,
                infidelity: f.infidelity,
                beta_tilde: f.beta_tilde,
                delta_beta_tilde: f.delta_beta_tilde,
                lambda: f.lambda,
                r_squared: f.r_squared,
                mse: f.mse,
                beta_tilde_peak_step: s.beta_tilde_peak_step,
                min_recorded_energy: s.min_recorded_energy,
                variational_bound_ok: bound_ok(r),
                steps_to_threshold: s.steps_to_threshold,
            }
        })
        .collect();
    let series: Vec<SeriesRow> = runs
        .iter()
        .flat_map(|r| {
            r.trajectory.iter().map(|t| SeriesRow {
                run_id: &r.id,
                step: t.step,
                loss: t.loss,
                energy: t.energy,
                infidelity: t.infidelity,
                beta_tilde: t.beta_tilde,
                delta_beta_tilde: t.delta_beta_tilde,
                lambda: t.lambda,
                r_squared: t.r_squared,
                mse: t.mse,
                wall_ms: t.wall_ms,
            })
        })
        .collect();
    let thresholds: Vec<ThresholdRow> = runs
        .iter()
        .map(|r| ThresholdRow {
            run_id: &r.id,
            ansatz: &r.summary.ansatz,
            beta: r.summary.beta,
            threshold: r.summary.threshold,
            steps: r.summary.steps_to_threshold,
        })
        .collect();
    let lambdas: Vec<LambdaRow> = runs
        .iter()
        .flat_map(|r| {
            r.trajectory.iter().filter_map(|row| {
                row.lambda.map(|lambda| LambdaRow {
                    run_id: &r.id,
                    step: row.step,
                    lambda,
                    infidelity: row.infidelity,
                })
            })
        })
        .collect();

    let summary = ReportSummary {
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        runs: runs.len(),
        failed_runs: runs.iter().filter(|r| r.summary.failed()).map(|r| r.id.clone()).collect(),
        sweeps: sweep_reports,
        variational_bound_ok: runs.iter().all(bound_ok),
    };

    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let files: [(&str, Vec<u8>); 6] = [
        ("runs.csv", to_csv(&RUNS_HEADER, &runs_rows)?),
        ("series.csv", to_csv(&SERIES_HEADER, &series)?),
        ("entropy.csv", to_csv(&["sweep_id", "beta", "entropy"], &entropy_rows)?),
        (
            "steps_to_threshold.csv",
            to_csv(&["run_id", "ansatz", "beta", "threshold", "steps"], &thresholds)?,
        ),
        (
            "lambda_infidelity.csv",
            to_csv(&["run_id", "step", "lambda", "infidelity"], &lambdas)?,
        ),
        ("report.json", to_json(&summary)?),
    ];
    for (name, bytes) in files {
        write_file(&out.join(name), &bytes)?;
    }
    Ok(summary)
}
