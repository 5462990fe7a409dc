//! The model context shared by every command, and single training runs.

use std::path::{Path, PathBuf};

use efftemp::ansatz::{forward, param_count, AnsatzSpec};
use efftemp::io::{decode_spectrum, encode_checkpoint, encode_spectrum, spectrum_cache_key, Checkpoint, SpectrumHeader};
use efftemp::model::{build_hamiltonian, full_spectrum, ground_state, Lattice, Spectrum, SpectrumOptions, XxzParams};
use efftemp::numerics::SparseRealMatrix;
use efftemp::objectives::{build_ites, ground_target, Objective, TargetState};
use efftemp::optimize::{steps_to_threshold, train, Monitor, TrainStatus};
use efftemp::spectral::{decompose, scatter_rows, FitResult};
use serde::{Deserialize, Serialize};

use crate::config::{self, ExperimentConfig, ModelBlock, ObjectiveKind, TargetChoice};
use crate::csvio::{scatter_csv, trajectory_csv, TrajectoryRow};
use crate::error::{CliError, CliResult};
use crate::manifest::{ManifestKind, RunManifest, SNAPSHOT_FILE};

/// Environment variable naming the spectrum cache directory.
pub const CACHE_ENV: &str = "EFFTEMP_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".efftemp-cache";

/// Relative gap below which the ground state counts as quasi-degenerate.
const GROUND_DEGENERACY_TOL: f64 = 1e-8;

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

/// Hamiltonian and exact spectrum of one model, read-only once built.
pub struct ModelContext {
    pub lattice: Lattice,
    pub params: XxzParams,
    pub h: SparseRealMatrix,
    pub spectrum: Spectrum,
    pub header: SpectrumHeader,
    pub cache_key: String,
    pub cache_path: PathBuf,
    pub cache_hit: bool,
}

impl ModelContext {
    pub fn ground_energy(&self) -> f64 {
        self.spectrum.energies()[self.spectrum.ground_index()]
    }
}

/// Loads the cached spectrum for `model` or computes and stores it.
///
/// A cache file that fails its checksum or describes another model is an
/// integrity error; it is never silently replaced.
pub fn prepare_model(model: &ModelBlock, cache: &Path) -> CliResult<ModelContext> {
    let lattice = model.lattice()?;
    let params = model.params()?;
    let sectored = model.use_sectors();
    let h = build_hamiltonian(&lattice, &params)?;
    let header = SpectrumHeader::new(&lattice, &params, sectored, &h);
    let cache_key = spectrum_cache_key(&lattice, &params, sectored);
    let cache_path = cache.join(format!("{cache_key}.spec"));

    if cache_path.exists() {
        let bytes = std::fs::read(&cache_path).map_err(CliError::io(&cache_path))?;
        let (found, spectrum) = decode_spectrum(&bytes)
            .map_err(|e| CliError::Integrity(format!("{}: {e}", cache_path.display())))?;
        if found != header {
            return Err(CliError::Integrity(format!(
                "{}: cached spectrum describes a different model or Hamiltonian",
                cache_path.display()
            )));
        }
        return Ok(ModelContext {
            lattice,
            params,
            h,
            spectrum,
            header,
            cache_key,
            cache_path,
            cache_hit: true,
        });
    }

    let opts = SpectrumOptions {
        use_sectors: sectored,
        dim_cap: model.dim_cap(),
    };
    let spectrum = full_spectrum(&h, &lattice, &params, opts).map_err(|e| match e {
        efftemp::Error::DimensionCap { .. } => CliError::Validation(e.to_string()),
        other => other.into(),
    })?;
    std::fs::create_dir_all(cache).map_err(CliError::io(cache))?;
    // Write-then-rename so concurrent readers never see a partial file.
    let mut tmp = tempfile::NamedTempFile::new_in(cache).map_err(CliError::io(cache))?;
    std::io::Write::write_all(&mut tmp, &encode_spectrum(&header, &spectrum)).map_err(CliError::io(tmp.path()))?;
    tmp.persist(&cache_path).map_err(|e| CliError::Io {
        path: cache_path.clone(),
        source: e.error,
    })?;
    Ok(ModelContext {
        lattice,
        params,
        h,
        spectrum,
        header,
        cache_key,
        cache_path,
        cache_hit: false,
    })
}

pub fn target_for(cfg: &ExperimentConfig, ctx: &ModelContext, beta: Option<f64>) -> CliResult<TargetState> {
    match cfg.objective.target {
        TargetChoice::Ground => Ok(ground_target(&ctx.spectrum)),
        TargetChoice::Ites => {
            let beta = beta.ok_or_else(|| CliError::Validation("ITES target without β".into()))?;
            Ok(build_ites(&ctx.spectrum, beta, cfg.objective.phase_seed)?)
        }
    }
}

pub fn objective_for<'a>(cfg: &ExperimentConfig, ctx: &'a ModelContext, target: &'a TargetState) -> Objective<'a> {
    match cfg.objective.kind {
        ObjectiveKind::Energy => Objective::Energy(&ctx.h),
        ObjectiveKind::Fidelity => Objective::Infidelity(&target.state),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub ansatz: String,
    pub parameters: usize,
    pub objective: ObjectiveKind,
    pub target: TargetChoice,
    pub beta: Option<f64>,
    pub seed: u64,
    pub steps: u64,
    pub final_step: u64,
    pub status: TrainStatus,
    pub ground_energy: f64,
    pub ground_warning: Option<String>,
    pub final_record: TrajectoryRow,
    pub final_fit: Option<FitResult>,
    /// Step of the largest recorded β̃.
    pub beta_tilde_peak_step: Option<u64>,
    pub min_recorded_energy: f64,
    pub threshold: f64,
    pub steps_to_threshold: Option<u64>,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.status.is_failure()
    }
}

pub const SUMMARY_FILE: &str = "final.summary.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

pub fn scatter_file(step: u64) -> String {
    format!("scatter_step_{step}.csv")
}

pub fn checkpoint_file(step: u64) -> String {
    format!("checkpoint_step_{step}.bin")
}

/// One training run into `out`. `cfg` must be resolved and carry a single β
/// for ITES targets. Numerical failures still write every output; the
/// summary status says so.
pub fn execute_run(cfg: &ExperimentConfig, ctx: &ModelContext, out: &Path) -> CliResult<RunSummary> {
    let spec: AnsatzSpec = cfg.ansatz_spec()?;
    let beta = match cfg.objective.target {
        TargetChoice::Ites => Some(
            cfg.objective
                .beta
                .ok_or_else(|| CliError::Validation("a single run needs objective.beta".into()))?,
        ),
        TargetChoice::Ground => None,
    };
    let target = target_for(cfg, ctx, beta)?;
    let objective = objective_for(cfg, ctx, &target);
    let fit_opts = cfg.analysis.fit_options();
    let filter = cfg.analysis.sector_filter();
    let monitor = Monitor::new(&ctx.h, &target.state, Some(&ctx.spectrum), fit_opts, filter)?;
    let train_cfg = cfg.train_config()?;
    let outcome = train(&spec, &objective, &monitor, &train_cfg)?;

    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut manifest = RunManifest::new(ManifestKind::Run, cfg, &ctx.cache_key, &ctx.header.hamiltonian_sha256, beta);
    manifest.put(out, SNAPSHOT_FILE, config::snapshot(cfg)?.as_bytes())?;
    manifest.put(out, TRAJECTORY_FILE, &trajectory_csv(&outcome.records)?)?;

    let mut exports: Vec<(u64, &[f64])> = outcome
        .snapshots
        .iter()
        .filter(|s| s.step != outcome.final_step)
        .map(|s| (s.step, s.theta.as_slice()))
        .collect();
    exports.push((outcome.final_step, &outcome.theta));
    let is_final = |step: u64| step == outcome.final_step;
    for (step, theta) in exports {
        if is_final(step) || cfg.run.scatter_steps.contains(&step) {
            let psi = forward(&spec, theta)?;
            let decomp = decompose(&psi, &ctx.spectrum, filter)?;
            manifest.put(out, &scatter_file(step), &scatter_csv(&scatter_rows(&decomp, &fit_opts))?)?;
        }
        if is_final(step) || cfg.run.checkpoint_steps.contains(&step) {
            let ckpt = Checkpoint::params(&spec, theta, cfg.run.seed, step)?;
            manifest.put(out, &checkpoint_file(step), &encode_checkpoint(&ckpt))?;
        }
    }

    let last = outcome
        .records
        .last()
        .ok_or_else(|| CliError::Numerical("run produced no records".into()))?;
    let peak = outcome
        .records
        .iter()
        .filter_map(|r| r.fit.map(|f| (r.step, f.beta_tilde)))
        .fold(None::<(u64, f64)>, |best, (s, b)| match best {
            Some((_, bb)) if bb >= b => best,
            _ => Some((s, b)),
        });
    let ground = ground_state(&ctx.spectrum, GROUND_DEGENERACY_TOL);
    let summary = RunSummary {
        ansatz: spec.variant.name().into(),
        parameters: param_count(&spec),
        objective: cfg.objective.kind,
        target: cfg.objective.target,
        beta,
        seed: cfg.run.seed,
        steps: train_cfg.total_steps,
        final_step: outcome.final_step,
        status: outcome.status.clone(),
        ground_energy: ctx.ground_energy(),
        ground_warning: ground.warning(),
        final_record: TrajectoryRow::from(last),
        final_fit: last.fit,
        beta_tilde_peak_step: peak.map(|p| p.0),
        min_recorded_energy: outcome.records.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min),
        threshold: cfg.analysis.threshold,
        steps_to_threshold: steps_to_threshold(&outcome.records, cfg.analysis.threshold),
    };
    manifest.put_json(out, SUMMARY_FILE, &summary)?;
    manifest.write(out)?;
    Ok(summary)
}

/// Copy of `cfg` pinned to one β of its grid.
pub fn at_beta(cfg: &ExperimentConfig, beta: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.objective.beta = Some(beta);
    c.objective.beta_grid = None;
    c
}
