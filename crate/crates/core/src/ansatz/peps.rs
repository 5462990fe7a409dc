//! Exact contraction of a doubly periodic PEPS.
//!
//! Each row is first contracted along its periodic horizontal bonds into a
//! row tensor of shape `(χ^Lx, χ^Lx, 2^Lx)` (up multi-index, down
//! multi-index, row configuration). The rows then form a periodic chain
//! along y, which yields every amplitude in the row-major basis order.

use super::chain::{chain_amplitudes, chain_pullback, ChainShape};
use crate::error::{invalid, Result};
use crate::model::{Lattice, LatticeKind};
use crate::numerics::C64;

struct Geometry {
    lx: usize,
    ly: usize,
    chi: usize,
}

impl Geometry {
    fn new(lattice: &Lattice, chi: usize) -> Result<Self> {
        if lattice.kind != LatticeKind::Square {
            return Err(invalid("PEPS needs a square lattice"));
        }
        let g = Self {
            lx: lattice.lx,
            ly: lattice.ly,
            chi,
        };
        let row_bond = chi
            .checked_pow(g.lx as u32)
            .filter(|d| d.saturating_mul(*d).saturating_mul(1 << g.lx) <= 1 << 26);
        if row_bond.is_none() {
            return Err(invalid(format!(
                "exact PEPS contraction with chi = {chi} on a width-{} lattice is too large",
                g.lx
            )));
        }
        Ok(g)
    }

    fn site_len(&self) -> usize {
        2 * self.chi.pow(4)
    }

    fn row_bond(&self) -> usize {
        self.chi.pow(self.lx as u32)
    }

    fn site_chain(&self) -> ChainShape {
        ChainShape {
            bond: self.chi,
            phys: vec![2 * self.chi * self.chi; self.lx],
        }
    }

    fn row_chain(&self) -> ChainShape {
        ChainShape {
            bond: self.row_bond(),
            phys: vec![1 << self.lx; self.ly],
        }
    }

    /// Site tensor `(u, d, l, r, s)` → chain tensor `(l, r, (u, d, s))`.
    fn to_chain_layout(&self, t: &[f64]) -> Vec<f64> {
        let x = self.chi;
        let q = 2 * x * x;
        let mut out = vec![0.0; t.len()];
        for u in 0..x {
            for d in 0..x {
                for l in 0..x {
                    for r in 0..x {
                        for s in 0..2 {
                            let src = (((u * x + d) * x + l) * x + r) * 2 + s;
                            let dst = (l * x + r) * q + (u * x + d) * 2 + s;
                            out[dst] = t[src];
                        }
                    }
                }
            }
        }
        out
    }

    fn from_chain_layout(&self, g: &[f64]) -> Vec<f64> {
        let x = self.chi;
        let q = 2 * x * x;
        let mut out = vec![0.0; g.len()];
        for u in 0..x {
            for d in 0..x {
                for l in 0..x {
                    for r in 0..x {
                        for s in 0..2 {
                            let src = (l * x + r) * q + (u * x + d) * 2 + s;
                            let dst = (((u * x + d) * x + l) * x + r) * 2 + s;
                            out[dst] = g[src];
                        }
                    }
                }
            }
        }
        out
    }

    /// For every site-chain output index, its position in the row tensor.
    fn row_tensor_map(&self) -> Vec<usize> {
        let x = self.chi;
        let q = 2 * x * x;
        let n = q.pow(self.lx as u32);
        let rb = self.row_bond();
        let p = 1usize << self.lx;
        (0..n)
            .map(|mut idx| {
                let (mut up, mut down, mut conf) = (0, 0, 0);
                let mut weight = 1;
                for site in 0..self.lx {
                    let digit = idx % q;
                    idx /= q;
                    let s = digit % 2;
                    let d = (digit / 2) % x;
                    let u = digit / (2 * x);
                    up += u * weight;
                    down += d * weight;
                    conf |= s << site;
                    weight *= x;
                }
                (up * rb + down) * p + conf
            })
            .collect()
    }

    fn row_tensors(&self, theta: &[f64], map: &[usize]) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let shape = self.site_chain();
        let mut site_tensors = Vec::with_capacity(self.ly);
        let mut rows = Vec::with_capacity(self.ly);
        for r in 0..self.ly {
            let sites: Vec<Vec<f64>> = (0..self.lx)
                .map(|c| {
                    let k = r * self.lx + c;
                    self.to_chain_layout(&theta[k * self.site_len()..(k + 1) * self.site_len()])
                })
                .collect();
            let refs: Vec<&[f64]> = sites.iter().map(|v| v.as_slice()).collect();
            let amps = chain_amplitudes(&shape, &refs);
            let mut row = vec![0.0; amps.len()];
            for (a, &pos) in amps.iter().zip(map) {
                row[pos] = *a;
            }
            rows.push(row);
            site_tensors.push(sites);
        }
        (site_tensors, rows)
    }
}

pub(super) fn forward(lattice: &Lattice, chi: usize, theta: &[f64]) -> Result<Vec<C64>> {
    let g = Geometry::new(lattice, chi)?;
    let map = g.row_tensor_map();
    let (_, rows) = g.row_tensors(theta, &map);
    let refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
    Ok(chain_amplitudes(&g.row_chain(), &refs)
        .into_iter()
        .map(|a| C64::new(a, 0.0))
        .collect())
}

pub(super) fn pullback(lattice: &Lattice, chi: usize, theta: &[f64], cot: &[C64]) -> Result<Vec<f64>> {
    let g = Geometry::new(lattice, chi)?;
    let map = g.row_tensor_map();
    let (sites, rows) = g.row_tensors(theta, &map);
    let w: Vec<f64> = cot.iter().map(|z| z.re).collect();
    let row_refs: Vec<&[f64]> = rows.iter().map(|v| v.as_slice()).collect();
    let row_grads = chain_pullback(&g.row_chain(), &row_refs, &w);
    let shape = g.site_chain();
    let mut grad = vec![0.0; theta.len()];
    for (r, row_grad) in row_grads.iter().enumerate() {
        let amp_cot: Vec<f64> = map.iter().map(|&pos| row_grad[pos]).collect();
        let refs: Vec<&[f64]> = sites[r].iter().map(|v| v.as_slice()).collect();
        let site_grads = chain_pullback(&shape, &refs, &amp_cot);
        for (c, sg) in site_grads.iter().enumerate() {
            let k = r * g.lx + c;
            grad[k * g.site_len()..(k + 1) * g.site_len()].copy_from_slice(&g.from_chain_layout(sg));
        }
    }
    Ok(grad)
}
