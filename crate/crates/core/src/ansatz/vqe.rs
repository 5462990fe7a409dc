//! Statevector simulation of the singlet-initialized rotation + SWAP circuit.
//!
//! Gates act on `|0⟩ = up` (bit 0) and `|1⟩ = down` (bit 1):
//! `Rz(θ) = e^{−iθZ}`, `Ry(θ) = e^{−iθY}` and
//! `e^{−iθ·SWAP} = cos θ·I − i sin θ·SWAP`. Each block applies Rz then Ry
//! on every qubit, then the SWAP gates in bond order.

use crate::error::{invalid, Result};
use crate::model::{Lattice, LatticeKind};
use crate::numerics::C64;

/// Bonds carrying parameterized SWAP gates, in application order.
///
/// Chains use the ladder `(0,1), (1,2), …, (L−2,L−1)` closed by `(L−1,0)`;
/// square lattices use open row bonds in reading order, then open column bonds.
pub fn vqe_bonds(lattice: &Lattice) -> Vec<(usize, usize)> {
    let (lx, ly) = (lattice.lx, lattice.ly);
    match lattice.kind {
        LatticeKind::Chain => {
            let mut b: Vec<(usize, usize)> = (0..lx.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            if lx >= 3 {
                b.push((lx - 1, 0));
            }
            b
        }
        LatticeKind::Square => {
            let mut b = Vec::new();
            for r in 0..ly {
                for c in 0..lx - 1 {
                    b.push((r * lx + c, r * lx + c + 1));
                }
            }
            for r in 0..ly - 1 {
                for c in 0..lx {
                    b.push((r * lx + c, (r + 1) * lx + c));
                }
            }
            b
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Gate {
    Rz(usize),
    Ry(usize),
    Swap(usize, usize),
}

/// Gates paired with their parameter index, in application order.
fn circuit(lattice: &Lattice, depth: usize) -> Vec<(Gate, usize)> {
    let l = lattice.sites();
    let bonds = vqe_bonds(lattice);
    let per_block = 2 * l + bonds.len();
    let mut gates = Vec::with_capacity(depth * (2 * l + bonds.len()));
    for k in 0..depth {
        let base = k * per_block;
        for j in 0..l {
            gates.push((Gate::Rz(j), base + j));
            gates.push((Gate::Ry(j), base + l + j));
        }
        for (n, &(a, b)) in bonds.iter().enumerate() {
            gates.push((Gate::Swap(a, b), base + 2 * l + n));
        }
    }
    gates
}

/// Product of singlets `(|01⟩ − |10⟩)/√2` on pairs `(0,1), (2,3), …`.
fn singlet_product(l: usize) -> Vec<C64> {
    let amp = std::f64::consts::FRAC_1_SQRT_2.powi((l / 2) as i32);
    (0..1usize << l)
        .map(|b| {
            let mut sign = 1.0;
            for p in 0..l / 2 {
                match (b >> (2 * p) & 1, b >> (2 * p + 1) & 1) {
                    (0, 1) => {}
                    (1, 0) => sign = -sign,
                    _ => return C64::new(0.0, 0.0),
                }
            }
            C64::new(sign * amp, 0.0)
        })
        .collect()
}

/// Applies `e^{−iθG}` (or its inverse when `theta` is negated).
fn apply(psi: &mut [C64], gate: Gate, theta: f64) {
    let (s, c) = theta.sin_cos();
    match gate {
        Gate::Rz(j) => {
            let down = C64::new(c, s);
            let up = down.conj();
            for (b, z) in psi.iter_mut().enumerate() {
                *z *= if b >> j & 1 == 0 { up } else { down };
            }
        }
        Gate::Ry(j) => {
            let mask = 1 << j;
            for b in 0..psi.len() {
                if b & mask == 0 {
                    let (x0, x1) = (psi[b], psi[b | mask]);
                    psi[b] = x0 * c - x1 * s;
                    psi[b | mask] = x0 * s + x1 * c;
                }
            }
        }
        Gate::Swap(i, j) => {
            let phase = C64::new(c, -s);
            let mi = 1 << i;
            let mj = 1 << j;
            let mis = C64::new(0.0, -s);
            for b in 0..psi.len() {
                let bi = b & mi != 0;
                let bj = b & mj != 0;
                if bi == bj {
                    psi[b] *= phase;
                } else if !bi {
                    let partner = b ^ mi ^ mj;
                    let (x, y) = (psi[b], psi[partner]);
                    psi[b] = x * c + y * mis;
                    psi[partner] = y * c + x * mis;
                }
            }
        }
    }
}

/// `⟨λ|G|ψ⟩` for the generator of `gate`.
fn generator_expectation(lambda: &[C64], psi: &[C64], gate: Gate) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    match gate {
        Gate::Rz(j) => {
            for (b, (l, p)) in lambda.iter().zip(psi).enumerate() {
                let z = if b >> j & 1 == 0 { 1.0 } else { -1.0 };
                acc += l.conj() * p * z;
            }
        }
        Gate::Ry(j) => {
            // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩.
            let mask = 1 << j;
            for b in 0..psi.len() {
                if b & mask == 0 {
                    let (p0, p1) = (psi[b], psi[b | mask]);
                    let y0 = p1 * C64::new(0.0, -1.0);
                    let y1 = p0 * C64::new(0.0, 1.0);
                    acc += lambda[b].conj() * y0 + lambda[b | mask].conj() * y1;
                }
            }
        }
        Gate::Swap(i, j) => {
            for (b, l) in lambda.iter().enumerate() {
                let partner = if (b >> i & 1) == (b >> j & 1) {
                    b
                } else {
                    b ^ (1 << i) ^ (1 << j)
                };
                acc += l.conj() * psi[partner];
            }
        }
    }
    acc
}

fn check(lattice: &Lattice) -> Result<()> {
    if lattice.sites() % 2 != 0 {
        return Err(invalid("VQE needs an even number of sites"));
    }
    Ok(())
}

pub(super) fn forward(lattice: &Lattice, depth: usize, theta: &[f64]) -> Result<Vec<C64>> {
    check(lattice)?;
    let mut psi = singlet_product(lattice.sites());
    for (gate, k) in circuit(lattice, depth) {
        apply(&mut psi, gate, theta[k]);
    }
    Ok(psi)
}

/// Adjoint-state reverse sweep: the state is un-computed gate by gate.
pub(super) fn pullback(lattice: &Lattice, depth: usize, theta: &[f64], cot: &[C64]) -> Result<Vec<f64>> {
    let mut psi = forward(lattice, depth, theta)?;
    let mut lambda = cot.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for (gate, k) in circuit(lattice, depth).into_iter().rev() {
        // d/dθ e^{−iθG}ψ = −iGψ, so dL/dθ = Re(−i⟨λ|G|ψ⟩) = Im⟨λ|G|ψ⟩.
        grad[k] += generator_expectation(&lambda, &psi, gate).im;
        apply(&mut psi, gate, -theta[k]);
        apply(&mut lambda, gate, -theta[k]);
    }
    Ok(grad)
}
