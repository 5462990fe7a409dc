//! ITES sweeps: one independent run per β, merged in grid order.

use std::path::Path;

use efftemp::spectral::{SweepPoint, SweepResult};
use rayon::prelude::*;

use crate::config::{self, ExperimentConfig, TargetChoice};
use crate::csvio::{to_csv, SweepRow};
use crate::error::{CliError, CliResult};
use crate::manifest::{ManifestKind, RunManifest, MANIFEST_FILE, SNAPSHOT_FILE};
use crate::pipeline::{at_beta, execute_run, ModelContext, RunSummary};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";

pub const SWEEP_HEADER: [&str; 9] = [
    "beta",
    "ok",
    "beta_tilde",
    "delta_beta_tilde",
    "lambda",
    "r_squared",
    "mse",
    "final_infidelity",
    "error",
];

pub fn run_dir_name(index: usize) -> String {
    format!("beta-{index:03}")
}

pub struct SweepOutcome {
    pub result: SweepResult,
    /// Per-β summaries in grid order; `None` where the run could not start.
    pub runs: Vec<Option<RunSummary>>,
}

impl SweepOutcome {
    pub fn any_failed(&self) -> bool {
        self.result.points.iter().any(|p| p.error.is_some())
    }
}

/// Runs the grid of `cfg` with at most `jobs` runs in flight.
pub fn execute_sweep(cfg: &ExperimentConfig, ctx: &ModelContext, out: &Path, jobs: usize) -> CliResult<SweepOutcome> {
    if cfg.objective.target != TargetChoice::Ites {
        return Err(CliError::Validation("ites-sweep needs target = \"ites\"".into()));
    }
    let grid = cfg
        .beta_grid()
        .ok_or_else(|| CliError::Validation("ites-sweep needs beta_grid or beta".into()))?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let results: Vec<CliResult<RunSummary>> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &beta)| execute_run(&at_beta(cfg, beta), ctx, &out.join(run_dir_name(i))))
            .collect()
    });

    let mut points = Vec::with_capacity(grid.len());
    let mut runs = Vec::with_capacity(grid.len());
    for (&beta, r) in grid.iter().zip(results) {
        let (point, summary) = match r {
            Ok(s) => {
                let point = SweepPoint {
                    beta,
                    fit: if s.failed() { None } else { s.final_fit },
                    final_infidelity: Some(s.final_record.infidelity),
                    error: s.failed().then(|| format!("{:?}", s.status)),
                };
                (point, Some(s))
            }
            Err(e @ CliError::Numerical(_)) => {
                let point = SweepPoint {
                    beta,
                    fit: None,
                    final_infidelity: None,
                    error: Some(e.to_string()),
                };
                (point, None)
            }
            // Configuration and I/O problems are not per-β failures.
            Err(e) => return Err(e),
        };
        points.push(point);
        runs.push(summary);
    }
    let result = SweepResult::new(points, cfg.analysis.beta_star_rel_dev)?;

    let mut manifest = RunManifest::new(ManifestKind::Sweep, cfg, &ctx.cache_key, &ctx.header.hamiltonian_sha256, None);
    manifest.put(out, SNAPSHOT_FILE, config::snapshot(cfg)?.as_bytes())?;
    let rows: Vec<SweepRow> = result.points.iter().map(SweepRow::from).collect();
    manifest.put(out, SWEEP_CSV, &to_csv(&SWEEP_HEADER, &rows)?)?;
    manifest.put_json(out, SWEEP_JSON, &result)?;
    for (i, run) in runs.iter().enumerate() {
        if run.is_some() {
            let name = format!("{}/{MANIFEST_FILE}", run_dir_name(i));
            let bytes = crate::csvio::read_file(&out.join(&name))?;
            manifest.files.insert(name, efftemp::io::sha256_hex(&bytes));
        }
    }
    manifest.write(out)?;
    Ok(SweepOutcome { result, runs })
}
