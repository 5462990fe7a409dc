use super::chain::{chain_amplitudes, chain_pullback, ChainShape};
use crate::numerics::C64;

fn shape(sites: usize, chi: usize) -> ChainShape {
    ChainShape {
        bond: chi,
        phys: vec![2; sites],
    }
}

fn split(theta: &[f64], sites: usize, chi: usize) -> Vec<&[f64]> {
    theta.chunks_exact(2 * chi * chi).take(sites).collect()
}

pub(super) fn forward(sites: usize, chi: usize, theta: &[f64]) -> Vec<C64> {
    chain_amplitudes(&shape(sites, chi), &split(theta, sites, chi))
        .into_iter()
        .map(|a| C64::new(a, 0.0))
        .collect()
}

pub(super) fn pullback(sites: usize, chi: usize, theta: &[f64], cot: &[C64]) -> Vec<f64> {
    // Real amplitudes only see the real part of the cotangent.
    let w: Vec<f64> = cot.iter().map(|g| g.re).collect();
    chain_pullback(&shape(sites, chi), &split(theta, sites, chi), &w)
        .into_iter()
        .flatten()
        .collect()
}
