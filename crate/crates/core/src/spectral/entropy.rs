use crate::error::{invalid, Error, Result};
use crate::numerics::{norm_sqr, singular_values, C64};

/// Von Neumann entropy of the reduced state on sites `0..left_sites`.
///
/// With site k on bit k, the left block is the low bits: ψ reshapes to a
/// `2^{L_B} × 2^{L_A}` row-major matrix whose singular values are the Schmidt values.
pub fn entanglement_entropy(psi: &[C64], left_sites: usize) -> Result<f64> {
    let dim = psi.len();
    if !dim.is_power_of_two() || dim < 2 {
        return Err(invalid("wavefunction length must be a power of two ≥ 2"));
    }
    let sites = dim.trailing_zeros() as usize;
    if left_sites == 0 || left_sites >= sites {
        return Err(invalid(format!("cut must satisfy 1 ≤ {left_sites} < {sites}")));
    }
    let n = norm_sqr(psi);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::ZeroVector("entanglement_entropy"));
    }
    let cols = 1usize << left_sites;
    let rows = dim / cols;
    let s = singular_values(rows, cols, psi)?;
    let total: f64 = s.iter().map(|x| x * x).sum();
    Ok(s
        .iter()
        .map(|x| x * x / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum())
}
