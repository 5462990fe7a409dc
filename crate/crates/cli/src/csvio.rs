//! CSV schemas for trajectories, scatter exports and sweeps.
//!
//! Floats are written in shortest round-trip form, so identical runs give
//! identical bytes.

use std::path::Path;

use efftemp::optimize::TrainRecord;
use efftemp::spectral::{ScatterRow, SweepPoint};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: [&str; 10] = [
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

pub const SCATTER_HEADER: [&str; 4] = ["epsilon", "weight", "sector", "used_in_fit"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: u64,
    pub loss: f64,
    pub energy: f64,
    pub infidelity: f64,
    pub beta_tilde: Option<f64>,
    pub delta_beta_tilde: Option<f64>,
    pub lambda: Option<f64>,
    pub r_squared: Option<f64>,
    pub mse: Option<f64>,
    pub wall_ms: u64,
}

impl From<&TrainRecord> for TrajectoryRow {
    fn from(r: &TrainRecord) -> Self {
        Self {
            step: r.step,
            loss: r.loss,
            energy: r.energy,
            infidelity: r.infidelity,
            beta_tilde: r.fit.map(|f| f.beta_tilde),
            delta_beta_tilde: r.fit.map(|f| f.delta_beta_tilde),
            lambda: r.fit.map(|f| f.lambda),
            r_squared: r.fit.map(|f| f.r_squared),
            mse: r.fit.and_then(|f| f.mse),
            wall_ms: r.wall_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterCsvRow {
    pub epsilon: f64,
    pub weight: f64,
    pub sector: Option<i32>,
    pub used_in_fit: bool,
}

impl From<&ScatterRow> for ScatterCsvRow {
    fn from(r: &ScatterRow) -> Self {
        Self {
            epsilon: r.epsilon,
            weight: r.weight,
            sector: r.sector,
            used_in_fit: r.used_in_fit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub ok: bool,
    pub beta_tilde: Option<f64>,
    pub delta_beta_tilde: Option<f64>,
    pub lambda: Option<f64>,
    pub r_squared: Option<f64>,
    pub mse: Option<f64>,
    pub final_infidelity: Option<f64>,
    pub error: Option<String>,
}

impl From<&SweepPoint> for SweepRow {
    fn from(p: &SweepPoint) -> Self {
        Self {
            beta: p.beta,
            ok: p.error.is_none(),
            beta_tilde: p.fit.map(|f| f.beta_tilde),
            delta_beta_tilde: p.fit.map(|f| f.delta_beta_tilde),
            lambda: p.fit.map(|f| f.lambda),
            r_squared: p.fit.map(|f| f.r_squared),
            mse: p.fit.and_then(|f| f.mse),
            final_infidelity: p.final_infidelity,
            error: p.error.clone(),
        }
    }
}

/// Serializes rows with a header; an empty row set still gets the header.
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Validation(format!("csv encoding: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Validation(format!("csv encoding: {e}")))
}

/// Parses a CSV document whose header must equal `header` exactly.
pub fn from_csv<T: DeserializeOwned>(bytes: &[u8], header: &[&str], what: &str) -> CliResult<Vec<T>> {
    let bad = |msg: String| CliError::Integrity(format!("{what}: {msg}"));
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let found = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(bad(format!("unexpected header {:?}", found.iter().collect::<Vec<_>>())));
    }
    r.deserialize().map(|row| row.map_err(|e| bad(e.to_string()))).collect()
}

/// Strict trajectory parser: exact header, strictly increasing steps.
pub fn parse_trajectory(bytes: &[u8]) -> CliResult<Vec<TrajectoryRow>> {
    let rows: Vec<TrajectoryRow> = from_csv(bytes, &TRAJECTORY_HEADER, "trajectory")?;
    if rows.windows(2).any(|w| w[0].step >= w[1].step) {
        return Err(CliError::Integrity("trajectory: steps not strictly increasing".into()));
    }
    Ok(rows)
}

pub fn trajectory_csv(records: &[TrainRecord]) -> CliResult<Vec<u8>> {
    let rows: Vec<TrajectoryRow> = records.iter().map(TrajectoryRow::from).collect();
    to_csv(&TRAJECTORY_HEADER, &rows)
}

pub fn scatter_csv(rows: &[ScatterRow]) -> CliResult<Vec<u8>> {
    let rows: Vec<ScatterCsvRow> = rows.iter().map(ScatterCsvRow::from).collect();
    to_csv(&SCATTER_HEADER, &rows)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use efftemp::spectral::FitResult;

    fn record(step: u64, fit: bool) -> TrainRecord {
        TrainRecord {
            step,
            loss: 0.5 / (step + 1) as f64,
            energy: -3.25,
            infidelity: 1e-7,
            fit: fit.then_some(FitResult {
                beta_tilde: 0.1,
                lambda: 2.5e-300,
                delta_beta_tilde: 0.0,
                r_squared: 1.0,
                mse: None,
                points_used: 3,
            }),
            wall_ms: 0,
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let recs = vec![record(0, true), record(25, false), record(30, true)];
        let bytes = trajectory_csv(&recs).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("step,loss,energy,infidelity,beta_tilde,delta_beta_tilde,lambda,r_squared,mse,wall_ms\n"));
        assert!(text.contains("1e-7"));
        let rows = parse_trajectory(&bytes).unwrap();
        let expected: Vec<TrajectoryRow> = recs.iter().map(TrajectoryRow::from).collect();
        assert_eq!(rows, expected);
    }

    #[test]
    fn empty_trajectory_has_header() {
        let bytes = trajectory_csv(&[]).unwrap();
        assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 1);
        assert!(parse_trajectory(&bytes).unwrap().is_empty());
    }

    #[test]
    fn trajectory_rejections() {
        let good = trajectory_csv(&[record(0, true), record(5, true)]).unwrap();
        let text = String::from_utf8(good).unwrap();
        assert!(parse_trajectory(text.replace("wall_ms", "wall").as_bytes()).is_err());
        let swapped = text.replacen("\n5,", "\n0,", 1);
        assert!(parse_trajectory(swapped.as_bytes()).is_err());
        assert!(parse_trajectory(b"step,loss\n1,2\n").is_err());
        let short = format!("{}0,1\n", TRAJECTORY_HEADER.join(",") + "\n");
        assert!(parse_trajectory(short.as_bytes()).is_err());
    }

    #[test]
    fn scatter_schema() {
        let rows = [ScatterRow {
            epsilon: -1.5,
            weight: 0.25,
            sector: Some(-2),
            used_in_fit: false,
        }];
        let text = String::from_utf8(scatter_csv(&rows).unwrap()).unwrap();
        assert_eq!(text, "epsilon,weight,sector,used_in_fit\n-1.5,0.25,-2,false\n");
    }
}
