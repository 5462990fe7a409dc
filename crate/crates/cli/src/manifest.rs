//! Run manifests: what produced a directory and the hash of every file in it.

use std::collections::BTreeMap;
use std::path::Path;

use efftemp::io::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::config::{self, ExperimentConfig};
use crate::csvio::{read_file, write_file};
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_FILE: &str = "config.snapshot";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestKind {
    Ed,
    Run,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub init: u64,
    pub phase: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub kind: ManifestKind,
    pub code_version: String,
    /// Resolved configuration, identical to the snapshot file.
    pub config: ExperimentConfig,
    pub spectrum_cache_key: String,
    pub hamiltonian_sha256: String,
    pub seeds: Seeds,
    /// Imaginary time of a single ITES run.
    pub beta: Option<f64>,
    /// Relative path to SHA-256 of every file written, the snapshot included.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(kind: ManifestKind, config: &ExperimentConfig, cache_key: &str, h_hash: &str, beta: Option<f64>) -> Self {
        Self {
            kind,
            code_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            spectrum_cache_key: cache_key.into(),
            hamiltonian_sha256: h_hash.into(),
            seeds: Seeds {
                init: config.run.seed,
                phase: config.objective.phase_seed,
            },
            beta,
            files: BTreeMap::new(),
        }
    }

    /// Writes `bytes` under `dir` and records its hash.
    pub fn put(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_file(&dir.join(name), bytes)?;
        self.files.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    pub fn put_json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> CliResult<()> {
        self.put(dir, name, &to_json(value)?)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_file(&dir.join(MANIFEST_FILE), &to_json(self)?)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Validation(format!("json encoding: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_manifest(dir: &Path) -> CliResult<RunManifest> {
    let bytes = read_file(&dir.join(MANIFEST_FILE))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Integrity(format!("{}: malformed manifest: {e}", dir.display())))
}

/// Problems found while checking a directory against its manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntegrityReport {
    pub missing: Vec<String>,
    pub mismatched: Vec<String>,
    pub notes: Vec<String>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.mismatched.is_empty() && self.notes.is_empty()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("missing: {}", self.missing.join(", ")));
        }
        if !self.mismatched.is_empty() {
            parts.push(format!("hash mismatch: {}", self.mismatched.join(", ")));
        }
        parts.extend(self.notes.iter().cloned());
        parts.join("; ")
    }
}

/// Checks every listed file, then that the snapshot parses to the manifest's
/// config. Sweep manifests list their per-β manifests, which are checked too.
pub fn verify_dir(dir: &Path) -> CliResult<(RunManifest, IntegrityReport)> {
    let manifest = read_manifest(dir)?;
    let mut report = IntegrityReport::default();
    verify_into(dir, "", &manifest, &mut report)?;
    Ok((manifest, report))
}

fn verify_into(dir: &Path, prefix: &str, manifest: &RunManifest, report: &mut IntegrityReport) -> CliResult<()> {
    for (name, hash) in &manifest.files {
        let label = format!("{prefix}{name}");
        if name.starts_with('/') || name.split('/').any(|c| c == ".." || c.is_empty()) {
            report.notes.push(format!("{label}: path escapes the run directory"));
            continue;
        }
        match std::fs::read(dir.join(name)) {
            Ok(bytes) if sha256_hex(&bytes) == *hash => {}
            Ok(_) => report.mismatched.push(label),
            Err(_) => report.missing.push(label),
        }
    }
    match manifest.files.contains_key(SNAPSHOT_FILE) {
        true => match std::fs::read_to_string(dir.join(SNAPSHOT_FILE)).ok().map(|t| config::parse_config(&t)) {
            Some(Ok(cfg)) if cfg == manifest.config => {}
            Some(Ok(_)) => report.notes.push(format!("{prefix}{SNAPSHOT_FILE} disagrees with the manifest")),
            Some(Err(e)) => report.notes.push(format!("{prefix}{SNAPSHOT_FILE}: {e}")),
            None => {}
        },
        false => report.notes.push(format!("{prefix}manifest lists no {SNAPSHOT_FILE}")),
    }
    if manifest.kind == ManifestKind::Sweep {
        for name in manifest.files.keys() {
            if let Some(sub) = name.strip_suffix(&format!("/{MANIFEST_FILE}")) {
                if report.missing.iter().chain(&report.mismatched).any(|m| *m == format!("{prefix}{name}")) {
                    continue;
                }
                let child = read_manifest(&dir.join(sub))?;
                verify_into(&dir.join(sub), &format!("{prefix}{sub}/"), &child, report)?;
            }
        }
    }
    Ok(())
}
