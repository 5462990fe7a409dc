use serde::{Deserialize, Serialize};

use super::{aggregate_degenerate, degenerate_groups, Decomposition, DEFAULT_DEGENERACY_REL_TOL};
use crate::error::{invalid, Error, Result};
use crate::numerics::ols_line;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub exclude_ground: bool,
    /// Points with weight at or below this are dropped; zero weights always are.
    pub weight_floor: f64,
    /// Merge degenerate multiplets and fit their mean weight.
    pub aggregate: bool,
    pub degeneracy_rel_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            exclude_ground: true,
            weight_floor: 0.0,
            aggregate: true,
            degeneracy_rel_tol: DEFAULT_DEGENERACY_REL_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Negated slope of ln(weight) against energy.
    pub beta_tilde: f64,
    /// `e^intercept`.
    pub lambda: f64,
    /// Standard error of the slope.
    pub delta_beta_tilde: f64,
    pub r_squared: f64,
    pub mse: Option<f64>,
    pub points_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub energy: f64,
    /// Per-state weight; the multiplet mean when aggregated.
    pub weight: f64,
    pub sector: Option<i32>,
    pub multiplicity: usize,
    pub used: bool,
}

pub fn fit_points(decomp: &Decomposition, opts: &FitOptions) -> Vec<FitPoint> {
    let merged;
    let entries = if opts.aggregate {
        merged = aggregate_degenerate(decomp, opts.degeneracy_rel_tol);
        &merged.entries
    } else {
        &decomp.entries
    };
    entries
        .iter()
        .map(|e| {
            let weight = e.weight / e.multiplicity as f64;
            FitPoint {
                energy: e.energy,
                weight,
                sector: e.sector,
                multiplicity: e.multiplicity,
                used: !(opts.exclude_ground && e.contains_ground) && weight > 0.0 && weight > opts.weight_floor,
            }
        })
        .collect()
}

/// Residuals this small relative to the data mean the line is exact.
const EXACT_FIT_RESIDUAL: f64 = 1e-10;

/// Least-squares fit of `ln w_i ≈ ln Λ − β̃ ε_i`.
pub fn fit_efftemp(decomp: &Decomposition, opts: &FitOptions) -> Result<FitResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = fit_points(decomp, opts)
        .iter()
        .filter(|p| p.used)
        .map(|p| (p.energy, p.weight.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(invalid(format!("effective-temperature fit needs ≥ 3 points, got {}", x.len())));
    }
    let line = ols_line(&x, &y)?;
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let max_res = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - line.intercept - line.slope * xi).abs())
        .fold(0.0, f64::max);
    let r_squared = if max_res <= EXACT_FIT_RESIDUAL * scale {
        1.0
    } else {
        line.r_squared
    };
    Ok(FitResult {
        beta_tilde: -line.slope,
        lambda: line.intercept.exp(),
        delta_beta_tilde: line.slope_stderr,
        r_squared,
        mse: None,
        points_used: x.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub epsilon: f64,
    pub weight: f64,
    pub sector: Option<i32>,
    pub used_in_fit: bool,
}

/// One row per eigenstate; `used_in_fit` reflects the multiplet it was fitted in.
pub fn scatter_rows(decomp: &Decomposition, opts: &FitOptions) -> Vec<ScatterRow> {
    let points = fit_points(decomp, opts);
    let groups = if opts.aggregate {
        degenerate_groups(&decomp.entries, opts.degeneracy_rel_tol)
    } else {
        (0..decomp.entries.len()).map(|k| k..k + 1).collect()
    };
    let mut rows = Vec::with_capacity(decomp.entries.len());
    for (g, range) in groups.into_iter().enumerate() {
        for e in &decomp.entries[range] {
            rows.push(ScatterRow {
                epsilon: e.energy,
                weight: e.weight,
                sector: e.sector,
                used_in_fit: points[g].used,
            });
        }
    }
    rows
}

/// Weights below this are clamped before taking logs.
pub const MSE_WEIGHT_CLAMP: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseResult {
    pub mse: f64,
    /// Entries where either weight had to be clamped.
    pub clamped: usize,
}

/// Mean squared difference of log weights over matching eigenstates.
pub fn mse_vs_target(decomp: &Decomposition, target: &Decomposition) -> Result<MseResult> {
    let (a, b) = (&decomp.entries, &target.entries);
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    if a.is_empty() {
        return Err(invalid("MSE over an empty decomposition"));
    }
    let mut clamped = 0;
    let mut sum = 0.0;
    for (p, q) in a.iter().zip(b) {
        if p.multiplicity != 1 || q.multiplicity != 1 {
            return Err(invalid("MSE needs unaggregated decompositions"));
        }
        if (p.energy - q.energy).abs() > 1e-9 * (1.0 + p.energy.abs()) {
            return Err(invalid("MSE operands come from different spectra"));
        }
        if p.weight < MSE_WEIGHT_CLAMP || q.weight < MSE_WEIGHT_CLAMP {
            clamped += 1;
        }
        let d = p.weight.max(MSE_WEIGHT_CLAMP).ln() - q.weight.max(MSE_WEIGHT_CLAMP).ln();
        sum += d * d;
    }
    Ok(MseResult {
        mse: sum / a.len() as f64,
        clamped,
    })
}

pub const DEFAULT_BETA_STAR_REL_DEV: f64 = 0.05;

fn deviates(beta: f64, beta_tilde: f64, rel_dev: f64) -> bool {
    if beta == 0.0 {
        beta_tilde.abs() > rel_dev
    } else {
        (beta_tilde - beta).abs() / beta > rel_dev
    }
}

/// Smallest grid β from which `|β̃ − β|/β > rel_dev` holds at every larger
/// grid point. Grid points without a fit are skipped.
pub fn detect_beta_star(grid: &[f64], beta_tilde: &[Option<f64>], rel_dev: f64) -> Option<f64> {
    let mut star = None;
    for (&b, bt) in grid.iter().zip(beta_tilde).rev() {
        match bt {
            Some(t) if deviates(b, *t, rel_dev) => star = Some(b),
            Some(_) => break,
            None => {}
        }
    }
    star
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub fit: Option<FitResult>,
    pub final_infidelity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub rel_dev: f64,
    pub beta_star: Option<f64>,
}

impl SweepResult {
    pub fn new(points: Vec<SweepPoint>, rel_dev: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("sweep grid is empty"));
        }
        if points.windows(2).any(|w| w[0].beta >= w[1].beta) {
            return Err(invalid("sweep grid must be strictly increasing"));
        }
        let grid: Vec<f64> = points.iter().map(|p| p.beta).collect();
        let tildes: Vec<Option<f64>> = points.iter().map(|p| p.fit.map(|f| f.beta_tilde)).collect();
        let beta_star = detect_beta_star(&grid, &tildes, rel_dev);
        Ok(Self {
            points,
            rel_dev,
            beta_star,
        })
    }
}
