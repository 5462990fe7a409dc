//! Spectral decomposition of approximate states and the effective-temperature
//! diagnostics built on it.

mod entropy;
mod fit;

pub use entropy::entanglement_entropy;
pub use fit::{
    detect_beta_star, fit_efftemp, fit_points, mse_vs_target, scatter_rows, FitOptions, FitPoint, FitResult,
    MseResult, ScatterRow, SweepPoint, SweepResult, DEFAULT_BETA_STAR_REL_DEV, MSE_WEIGHT_CLAMP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Spectrum;
use crate::numerics::{norm_sqr, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompEntry {
    pub energy: f64,
    pub weight: f64,
    /// Magnetization sector, absent when a merged multiplet spans sectors.
    pub sector: Option<i32>,
    /// Number of eigenstates merged into this entry.
    pub multiplicity: usize,
    /// Whether this entry contains the spectrum's ground state.
    pub contains_ground: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorFilter {
    pub m: i32,
    pub renormalize: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Sorted by energy.
    pub entries: Vec<DecompEntry>,
    pub source_norm: f64,
    pub sector_filter: Option<i32>,
    pub renormalized_within_sector: bool,
}

impl Decomposition {
    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.energy).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }
}

/// `|c_i|² = |⟨ε_i|ψ⟩|² / ⟨ψ|ψ⟩` for every eigenstate, optionally restricted to one sector.
pub fn decompose(psi: &[C64], spectrum: &Spectrum, filter: Option<SectorFilter>) -> Result<Decomposition> {
    let n = norm_sqr(psi);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ZeroVector("decompose"));
    }
    let overlaps = spectrum.overlaps(psi)?;
    let labels = spectrum.sector_labels();
    let mut entries: Vec<DecompEntry> = overlaps
        .iter()
        .zip(spectrum.energies())
        .zip(labels)
        .enumerate()
        .filter(|(_, (_, &m))| filter.is_none_or(|f| f.m == m))
        .map(|(i, ((c, &e), &m))| DecompEntry {
            energy: e,
            weight: c.norm_sqr() / n,
            sector: Some(m),
            multiplicity: 1,
            contains_ground: i == spectrum.ground_index(),
        })
        .collect();
    let renormalize = filter.is_some_and(|f| f.renormalize);
    if renormalize {
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if total > 0.0 {
            for e in &mut entries {
                e.weight /= total;
            }
        }
    }
    Ok(Decomposition {
        entries,
        source_norm: n.sqrt(),
        sector_filter: filter.map(|f| f.m),
        renormalized_within_sector: renormalize,
    })
}

/// Default relative energy tolerance for merging degenerate multiplets.
pub const DEFAULT_DEGENERACY_REL_TOL: f64 = 1e-10;

/// Index ranges of consecutive entries within `rel_tol · width` of their neighbour.
pub(crate) fn degenerate_groups(entries: &[DecompEntry], rel_tol: f64) -> Vec<std::ops::Range<usize>> {
    if entries.is_empty() {
        return Vec::new();
    }
    let width = entries.last().unwrap().energy - entries[0].energy;
    let tol = rel_tol * width;
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..entries.len() {
        if (entries[k].energy - entries[k - 1].energy).abs() > tol {
            groups.push(start..k);
            start = k;
        }
    }
    groups.push(start..entries.len());
    groups
}

/// Merges degenerate multiplets: weights summed, energy weight-averaged,
/// sector kept only when every member agrees.
pub fn aggregate_degenerate(decomp: &Decomposition, rel_tol: f64) -> Decomposition {
    let entries = degenerate_groups(&decomp.entries, rel_tol)
        .into_iter()
        .map(|r| merge(&decomp.entries[r]))
        .collect();
    Decomposition {
        entries,
        ..decomp.clone()
    }
}

fn merge(group: &[DecompEntry]) -> DecompEntry {
    if group.len() == 1 {
        return group[0];
    }
    let weight: f64 = group.iter().map(|e| e.weight).sum();
    let energy = if weight > 0.0 {
        group.iter().map(|e| e.energy * e.weight).sum::<f64>() / weight
    } else {
        group.iter().map(|e| e.energy).sum::<f64>() / group.len() as f64
    };
    let first = group[0].sector;
    DecompEntry {
        energy,
        weight,
        sector: if group.iter().all(|e| e.sector == first) { first } else { None },
        multiplicity: group.iter().map(|e| e.multiplicity).sum(),
        contains_ground: group.iter().any(|e| e.contains_ground),
    }
}

#[cfg(test)]
mod tests;
