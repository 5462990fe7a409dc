use serde::{Deserialize, Serialize};

use super::Lattice;
use crate::error::{invalid, Error, Result};
use crate::numerics::SparseRealMatrix;

/// Couplings of `Σ_<ij> Jx XX + Jy YY + Jz ZZ + Σ_i h_i Z_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub h: Vec<f64>,
}

impl XxzParams {
    pub fn uniform(jx: f64, jy: f64, jz: f64, hz: f64, sites: usize) -> Self {
        Self {
            jx,
            jy,
            jz,
            h: vec![hz; sites],
        }
    }

    pub fn conserves_sz(&self) -> bool {
        self.jx == self.jy
    }

    fn validate(&self, sites: usize) -> Result<()> {
        if self.h.len() != sites {
            return Err(Error::DimensionMismatch {
                expected: sites,
                found: self.h.len(),
            });
        }
        if ![self.jx, self.jy, self.jz].iter().chain(&self.h).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("XXZ couplings"));
        }
        Ok(())
    }
}

/// Bit `k` of a basis index is site `k`; a 0 bit is spin up (`Z = +1`).
#[inline]
pub fn z_eigenvalue(basis: usize, site: usize) -> f64 {
    if basis >> site & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Largest site count the dense pipeline accepts at all (the 2^L indexing
/// stays well inside `usize` far beyond this).
pub const MAX_SITES: usize = 24;

pub fn build_hamiltonian(lattice: &Lattice, params: &XxzParams) -> Result<SparseRealMatrix> {
    let sites = lattice.sites();
    if sites > MAX_SITES {
        return Err(invalid(format!("{sites} sites exceeds the supported {MAX_SITES}")));
    }
    params.validate(sites)?;
    let dim = 1usize << sites;
    let mut triplets = Vec::with_capacity(dim * (1 + lattice.bonds().len()));
    for b in 0..dim {
        let mut diag = 0.0;
        for (site, h) in params.h.iter().enumerate() {
            diag += h * z_eigenvalue(b, site);
        }
        for &(i, j) in lattice.bonds() {
            let zz = z_eigenvalue(b, i) * z_eigenvalue(b, j);
            diag += params.jz * zz;
            // XX flips both spins with amplitude 1; YY with -1 on aligned
            // pairs and +1 on anti-aligned pairs.
            let off = if zz > 0.0 {
                params.jx - params.jy
            } else {
                params.jx + params.jy
            };
            if off != 0.0 {
                let flipped = b ^ (1 << i) ^ (1 << j);
                triplets.push((b, flipped, off));
            }
        }
        triplets.push((b, b, diag));
    }
    SparseRealMatrix::from_triplets(dim, triplets)
}

/// Basis states with total magnetization `m = (#up − #down)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sector {
    pub m: i32,
    pub indices: Vec<usize>,
}

pub fn magnetization(basis: usize, sites: usize) -> i32 {
    let down = basis.count_ones() as i32;
    sites as i32 - 2 * down
}

/// Partition of `0..2^L` by magnetization, ordered by `m` ascending.
pub fn sz_sectors(sites: usize) -> Vec<Sector> {
    let mut sectors: Vec<Sector> = (0..=sites)
        .map(|down| Sector {
            m: sites as i32 - 2 * down as i32,
            indices: Vec::new(),
        })
        .rev()
        .collect();
    for b in 0..(1usize << sites) {
        let down = b.count_ones() as usize;
        sectors[sites - down].indices.push(b);
    }
    sectors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sym_eig, C64};

    #[test]
    fn heisenberg_dimer_spectrum() {
        let lat = Lattice::chain(2, false).unwrap();
        let h = build_hamiltonian(&lat, &XxzParams::uniform(1.0, 1.0, 1.0, 0.0, 2)).unwrap();
        let eig = sym_eig(&h.to_dense().unwrap()).unwrap();
        let expected = [-3.0, 1.0, 1.0, 1.0];
        for (a, b) in eig.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn field_only_is_diagonal() {
        let lat = Lattice::chain(2, false).unwrap();
        let p = XxzParams {
            jx: 0.0,
            jy: 0.0,
            jz: 0.0,
            h: vec![1.0, 1.0],
        };
        let h = build_hamiltonian(&lat, &p).unwrap();
        assert_eq!(h.diagonal(), vec![2.0, 0.0, 0.0, -2.0]);
        assert_eq!(h.nnz(), 4);
    }

    #[test]
    fn field_length_checked() {
        let lat = Lattice::chain(3, true).unwrap();
        assert!(build_hamiltonian(&lat, &XxzParams::uniform(1.0, 1.0, 1.0, 0.0, 2)).is_err());
    }

    #[test]
    fn sector_sizes() {
        let sizes: Vec<usize> = sz_sectors(2).iter().map(|s| s.indices.len()).collect();
        assert_eq!(sizes, vec![1, 2, 1]);
        let half = sz_sectors(4).into_iter().find(|s| s.m == 0).unwrap();
        assert_eq!(half.indices.len(), 6);
        let half12 = sz_sectors(12).into_iter().find(|s| s.m == 0).unwrap();
        // C(12, 6) by the multiplicative formula.
        let binom = (1..=6u64).fold(1u64, |acc, k| acc * (12 - 6 + k) / k);
        assert_eq!(half12.indices.len() as u64, binom);
    }

    #[test]
    fn sectors_partition_the_basis() {
        let sectors = sz_sectors(7);
        let mut all: Vec<usize> = sectors.iter().flat_map(|s| s.indices.clone()).collect();
        all.sort();
        assert_eq!(all, (0..128).collect::<Vec<_>>());
        for s in &sectors {
            assert!(s.indices.iter().all(|&b| magnetization(b, 7) == s.m));
        }
    }

    /// H commutes with every sector projector when Jx == Jy.
    #[test]
    fn u1_symmetry_when_jx_equals_jy() {
        for lat in [
            Lattice::chain(6, true).unwrap(),
            Lattice::square(2, 4, true).unwrap(),
        ] {
            let n = lat.sites();
            let p = XxzParams {
                jx: 0.7,
                jy: 0.7,
                jz: -1.3,
                h: (0..n).map(|i| 0.1 * i as f64).collect(),
            };
            let h = build_hamiltonian(&lat, &p).unwrap();
            let mut max_leak: f64 = 0.0;
            for b in 0..(1 << n) {
                for (c, v) in h.row(b) {
                    if magnetization(b, n) != magnetization(c, n) {
                        max_leak = max_leak.max(v.abs());
                    }
                }
            }
            assert!(max_leak < 1e-12);
            // Hermiticity is exact.
            for b in 0..(1 << n) {
                for (c, v) in h.row(b) {
                    assert_eq!(v, h.get(c, b));
                }
            }
        }
    }

    #[test]
    fn anisotropic_breaks_u1() {
        let lat = Lattice::chain(4, true).unwrap();
        let h = build_hamiltonian(&lat, &XxzParams::uniform(1.0, 0.5, 1.0, 0.0, 4)).unwrap();
        let x = vec![C64::new(1.0, 0.0); 16];
        assert!(h.spmv(&x).is_ok());
        assert!(h.get(0, 0b11) != 0.0);
    }
}
