use super::{magnetization, sz_sectors, Lattice, XxzParams};
use crate::error::{invalid, Error, Result};
use crate::numerics::{sym_eig, SparseRealMatrix, SymEig, C64};

pub const DEFAULT_DIM_CAP: usize = 1 << 13;

#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    pub use_sectors: bool,
    pub dim_cap: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            use_sectors: true,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

/// Dense eigensystem of H restricted to a set of basis states.
#[derive(Clone, Debug)]
pub struct EigenBlock {
    /// Magnetization of the block, or `None` for the whole Hilbert space.
    pub m: Option<i32>,
    pub indices: Vec<usize>,
    pub eig: SymEig,
}

/// Complete eigensystem of a Hamiltonian in the 2^L computational basis.
///
/// Eigenvectors are real (H is real symmetric) and stored per block; the
/// global index `i` orders all eigenpairs by ascending energy.
#[derive(Clone, Debug)]
pub struct Spectrum {
    sites: usize,
    energies: Vec<f64>,
    labels: Vec<i32>,
    blocks: Vec<EigenBlock>,
    locate: Vec<(usize, usize)>,
}

impl Spectrum {
    /// Assembles a spectrum from diagonalized blocks. `labels` overrides the
    /// block magnetizations (required for a full-space block).
    pub fn from_blocks(sites: usize, blocks: Vec<EigenBlock>, labels: Option<Vec<i32>>) -> Result<Self> {
        let dim = 1usize << sites;
        let total: usize = blocks.iter().map(|b| b.indices.len()).sum();
        if total != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: total,
            });
        }
        let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(dim);
        for (bi, block) in blocks.iter().enumerate() {
            if block.eig.n != block.indices.len() {
                return Err(invalid("block eigensystem size differs from its basis"));
            }
            for (col, &e) in block.eig.values.iter().enumerate() {
                order.push((e, bi, col));
            }
        }
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let energies: Vec<f64> = order.iter().map(|o| o.0).collect();
        let locate: Vec<(usize, usize)> = order.iter().map(|o| (o.1, o.2)).collect();
        let labels = match labels {
            Some(l) if l.len() == dim => l,
            Some(l) => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: l.len(),
                })
            }
            None => locate
                .iter()
                .map(|&(bi, _)| blocks[bi].m.ok_or_else(|| invalid("full-space block needs explicit labels")))
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            sites,
            energies,
            labels,
            blocks,
            locate,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn sector_labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn blocks(&self) -> &[EigenBlock] {
        &self.blocks
    }

    pub fn is_sectored(&self) -> bool {
        self.blocks.iter().all(|b| b.m.is_some())
    }

    pub fn ground_index(&self) -> usize {
        0
    }

    /// Support (basis indices) and real components of eigenvector `i`.
    pub fn eigenvector_parts(&self, i: usize) -> (&[usize], &[f64]) {
        let (bi, col) = self.locate[i];
        let block = &self.blocks[bi];
        (&block.indices, block.eig.vector(col))
    }

    /// Eigenvector `i` embedded in the full 2^L space.
    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        let (idx, comps) = self.eigenvector_parts(i);
        for (&b, &v) in idx.iter().zip(comps) {
            out[b] = C64::new(v, 0.0);
        }
        out
    }

    /// `⟨ε_i|ψ⟩` for every eigenpair, in global order.
    pub fn overlaps(&self, psi: &[C64]) -> Result<Vec<C64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let mut per_block: Vec<Vec<C64>> = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let local: Vec<C64> = block.indices.iter().map(|&b| psi[b]).collect();
            let n = block.indices.len();
            per_block.push(
                (0..n)
                    .map(|col| {
                        block
                            .eig
                            .vector(col)
                            .iter()
                            .zip(&local)
                            .map(|(v, z)| z * *v)
                            .sum()
                    })
                    .collect(),
            );
        }
        Ok(self.locate.iter().map(|&(bi, col)| per_block[bi][col]).collect())
    }

    /// `Σ_i c_i |ε_i⟩`.
    pub fn synthesize(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coeffs.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (i, c) in coeffs.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            let (idx, comps) = self.eigenvector_parts(i);
            for (&b, &v) in idx.iter().zip(comps) {
                out[b] += c * v;
            }
        }
        Ok(out)
    }
}

/// Exact spectrum of `h`, block-diagonalized by magnetization when requested.
pub fn full_spectrum(
    h: &SparseRealMatrix,
    lattice: &Lattice,
    params: &XxzParams,
    opts: SpectrumOptions,
) -> Result<Spectrum> {
    let sites = lattice.sites();
    let dim = 1usize << sites;
    if h.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.dim(),
        });
    }
    if opts.use_sectors && !params.conserves_sz() {
        return Err(invalid(format!(
            "sector decomposition needs Jx == Jy (got Jx = {}, Jy = {})",
            params.jx, params.jy
        )));
    }
    if dim > opts.dim_cap {
        let largest = sz_sectors(sites)
            .iter()
            .map(|s| s.indices.len())
            .max()
            .unwrap_or(0);
        return Err(Error::DimensionCap {
            dim,
            cap: opts.dim_cap,
            detail: format!(
                " (2^{sites} = {dim}; largest magnetization sector has dimension {largest}; raise the cap or reduce L)"
            ),
        });
    }
    if opts.use_sectors {
        let mut blocks = Vec::new();
        for sector in sz_sectors(sites) {
            let dense = h.dense_block(&sector.indices)?;
            let eig = sym_eig(&dense)?;
            blocks.push(EigenBlock {
                m: Some(sector.m),
                indices: sector.indices,
                eig,
            });
        }
        Spectrum::from_blocks(sites, blocks, None)
    } else {
        let eig = sym_eig(&h.to_dense()?)?;
        let indices: Vec<usize> = (0..dim).collect();
        let block = EigenBlock {
            m: None,
            indices,
            eig,
        };
        let mut order: Vec<(f64, usize)> = block.eig.values.iter().copied().zip(0..).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut labels = vec![0; dim];
        for (global, &(_, col)) in order.iter().enumerate() {
            labels[global] = dominant_sector(block.eig.vector(col), sites);
        }
        Spectrum::from_blocks(sites, vec![block], Some(labels))
    }
}

/// Magnetization carrying the most weight; ties go to the smaller |m|.
fn dominant_sector(v: &[f64], sites: usize) -> i32 {
    let mut weight = vec![0.0; sites + 1];
    for (b, x) in v.iter().enumerate() {
        weight[b.count_ones() as usize] += x * x;
    }
    let mut best: Option<(f64, i32)> = None;
    for (down, &w) in weight.iter().enumerate() {
        let m = magnetization((1usize << down) - 1, sites);
        best = match best {
            None => Some((w, m)),
            Some((bw, bm)) => {
                if w > bw + 1e-12 || ((w - bw).abs() <= 1e-12 && m.abs() < bm.abs()) {
                    Some((w, m))
                } else {
                    Some((bw, bm))
                }
            }
        };
    }
    best.map(|b| b.1).unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<C64>,
    /// `ε₁ − ε₀`, or infinity for a one-dimensional space.
    pub gap: f64,
    pub quasi_degenerate: bool,
}

impl GroundState {
    pub fn warning(&self) -> Option<String> {
        self.quasi_degenerate.then(|| {
            format!(
                "ground state is quasi-degenerate (gap {:.3e}); fidelity targets depend on the eigensolver basis",
                self.gap
            )
        })
    }
}

pub fn ground_state(spectrum: &Spectrum, degeneracy_tol: f64) -> GroundState {
    let e = spectrum.energies();
    let gap = if e.len() > 1 { e[1] - e[0] } else { f64::INFINITY };
    GroundState {
        energy: e[0],
        vector: spectrum.eigenvector(0),
        gap,
        quasi_degenerate: gap < degeneracy_tol,
    }
}
