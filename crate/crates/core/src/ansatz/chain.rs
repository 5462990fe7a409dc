//! Closed (periodic) chains of real matrices: `amp(s) = Tr(M₀[s₀] M₁[s₁] ⋯)`.
//!
//! Site `j` holds a tensor of shape `(bond, bond, phys[j])` stored as
//! `(left * bond + right) * phys[j] + s`. Output amplitudes use mixed-radix
//! indexing with site 0 as the least significant digit.

#[derive(Clone, Debug)]
pub(crate) struct ChainShape {
    pub bond: usize,
    pub phys: Vec<usize>,
}

impl ChainShape {
    #[cfg(test)]
    pub fn tensor_len(&self, site: usize) -> usize {
        self.bond * self.bond * self.phys[site]
    }

    pub fn output_len(&self) -> usize {
        self.phys.iter().product()
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Copies slice `s` of tensor `t` into the `d x d` matrix `out`.
fn slice_into(t: &[f64], d: usize, p: usize, s: usize, out: &mut [f64]) {
    for (k, o) in out.iter_mut().enumerate() {
        *o = t[k * p + s];
    }
    debug_assert_eq!(out.len(), d * d);
}

/// `c = a · b` for `d x d` row-major matrices.
fn matmul(a: &[f64], b: &[f64], d: usize, c: &mut [f64]) {
    c.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..d {
        let crow = &mut c[i * d..(i + 1) * d];
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * d..(k + 1) * d];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aik * bj;
            }
        }
    }
}

/// Left products over sites `0..k` for every `k` in `0..=upto`:
/// `levels[k]` holds `Π p_{<k}` matrices back to back.
fn prefix_levels(shape: &ChainShape, tensors: &[&[f64]], upto: usize) -> Vec<Vec<f64>> {
    let d = shape.bond;
    let dd = d * d;
    let mut levels = Vec::with_capacity(upto + 1);
    levels.push(identity(d));
    let mut slice = vec![0.0; dd];
    for j in 0..upto {
        let prev: &Vec<f64> = &levels[j];
        let count = prev.len() / dd;
        let p = shape.phys[j];
        let mut next = vec![0.0; count * p * dd];
        for s in 0..p {
            slice_into(tensors[j], d, p, s, &mut slice);
            for idx in 0..count {
                let out = idx + s * count;
                matmul(&prev[idx * dd..(idx + 1) * dd], &slice, d, &mut next[out * dd..(out + 1) * dd]);
            }
        }
        levels.push(next);
    }
    levels
}

/// Right products over sites `k..L` for every `k` in `from..=L`:
/// `levels[k - from]` holds `Π p_{>=k}` matrices.
fn suffix_levels(shape: &ChainShape, tensors: &[&[f64]], from: usize) -> Vec<Vec<f64>> {
    let d = shape.bond;
    let dd = d * d;
    let l = shape.phys.len();
    let mut rev: Vec<Vec<f64>> = Vec::with_capacity(l - from + 1);
    rev.push(identity(d));
    let mut slice = vec![0.0; dd];
    for j in (from..l).rev() {
        let prev = rev.last().unwrap();
        let count = prev.len() / dd;
        let p = shape.phys[j];
        let mut next = vec![0.0; count * p * dd];
        for s in 0..p {
            slice_into(tensors[j], d, p, s, &mut slice);
            for idx in 0..count {
                let out = s + p * idx;
                matmul(&slice, &prev[idx * dd..(idx + 1) * dd], d, &mut next[out * dd..(out + 1) * dd]);
            }
        }
        rev.push(next);
    }
    rev.reverse();
    rev
}

/// `Σ_{a,c} P[a][c] · S[c][a]` given `st = Sᵀ`.
fn trace_prod_t(p: &[f64], st: &[f64]) -> f64 {
    p.iter().zip(st).map(|(x, y)| x * y).sum()
}

fn transpose(m: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = m[i * d + j];
        }
    }
}

pub(crate) fn chain_amplitudes(shape: &ChainShape, tensors: &[&[f64]]) -> Vec<f64> {
    let l = shape.phys.len();
    let d = shape.bond;
    let dd = d * d;
    let split = l / 2;
    let prefixes = prefix_levels(shape, tensors, split);
    let low = prefixes.last().unwrap();
    let suffixes = suffix_levels(shape, tensors, split);
    let high = &suffixes[0];
    let n_low = low.len() / dd;
    let n_high = high.len() / dd;
    let mut out = vec![0.0; n_low * n_high];
    let mut st = vec![0.0; dd];
    for h in 0..n_high {
        transpose(&high[h * dd..(h + 1) * dd], d, &mut st);
        for lo in 0..n_low {
            out[lo + n_low * h] = trace_prod_t(&low[lo * dd..(lo + 1) * dd], &st);
        }
    }
    out
}

/// Vector-Jacobian product: gradients of `Σ_b cot[b] · amp(b)` with respect
/// to every tensor element.
pub(crate) fn chain_pullback(shape: &ChainShape, tensors: &[&[f64]], cot: &[f64]) -> Vec<Vec<f64>> {
    let l = shape.phys.len();
    let d = shape.bond;
    let dd = d * d;
    debug_assert_eq!(cot.len(), shape.output_len());
    let prefixes = prefix_levels(shape, tensors, l.saturating_sub(1));
    let suffixes = suffix_levels(shape, tensors, 1);
    let mut grads = Vec::with_capacity(l);
    let mut acc = vec![0.0; dd];
    let mut prod = vec![0.0; dd];
    for j in 0..l {
        let p = shape.phys[j];
        let pre = &prefixes[j];
        let suf = &suffixes[j]; // sites j+1..L
        let n_low = pre.len() / dd;
        let n_high = suf.len() / dd;
        let mut g = vec![0.0; dd * p];
        for s in 0..p {
            for h in 0..n_high {
                acc.iter_mut().for_each(|x| *x = 0.0);
                let base = n_low * (s + p * h);
                let mut any = false;
                for lo in 0..n_low {
                    let w = cot[base + lo];
                    if w == 0.0 {
                        continue;
                    }
                    any = true;
                    for (a, m) in acc.iter_mut().zip(&pre[lo * dd..(lo + 1) * dd]) {
                        *a += w * m;
                    }
                }
                if !any {
                    continue;
                }
                // dAmp/dM_j[s][a][c] = (S P)[c][a]
                matmul(&suf[h * dd..(h + 1) * dd], &acc, d, &mut prod);
                for a in 0..d {
                    for c in 0..d {
                        g[(a * d + c) * p + s] += prod[c * d + a];
                    }
                }
            }
        }
        grads.push(g);
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensors(shape: &ChainShape, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..shape.phys.len())
            .map(|j| (0..shape.tensor_len(j)).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    /// Direct evaluation: explicit product of the selected matrices, then trace.
    fn brute(shape: &ChainShape, t: &[Vec<f64>], idx: usize) -> f64 {
        let d = shape.bond;
        let mut rem = idx;
        let mut m = identity(d);
        let mut tmp = vec![0.0; d * d];
        let mut sl = vec![0.0; d * d];
        for (j, &p) in shape.phys.iter().enumerate() {
            let s = rem % p;
            rem /= p;
            slice_into(&t[j], d, p, s, &mut sl);
            matmul(&m, &sl, d, &mut tmp);
            m.copy_from_slice(&tmp);
        }
        (0..d).map(|i| m[i * d + i]).sum()
    }

    #[test]
    fn amplitudes_match_direct_products() {
        for (bond, phys) in [(3, vec![2, 2, 2, 2, 2]), (2, vec![3, 2, 4]), (1, vec![2]), (4, vec![2, 2])] {
            let shape = ChainShape { bond, phys };
            let t = random_tensors(&shape, 17);
            let refs: Vec<&[f64]> = t.iter().map(|v| v.as_slice()).collect();
            let amps = chain_amplitudes(&shape, &refs);
            assert_eq!(amps.len(), shape.output_len());
            for (i, a) in amps.iter().enumerate() {
                assert!((a - brute(&shape, &t, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let shape = ChainShape {
            bond: 3,
            phys: vec![2, 3, 2, 2],
        };
        let t = random_tensors(&shape, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cot: Vec<f64> = (0..shape.output_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |t: &[Vec<f64>]| -> f64 {
            let refs: Vec<&[f64]> = t.iter().map(|v| v.as_slice()).collect();
            chain_amplitudes(&shape, &refs).iter().zip(&cot).map(|(a, w)| a * w).sum()
        };
        let refs: Vec<&[f64]> = t.iter().map(|v| v.as_slice()).collect();
        let g = chain_pullback(&shape, &refs, &cot);
        let h = 1e-6;
        for j in 0..t.len() {
            for k in 0..t[j].len() {
                let mut tp = t.clone();
                tp[j][k] += h;
                let mut tm = t.clone();
                tm[j][k] -= h;
                let fd = (f(&tp) - f(&tm)) / (2.0 * h);
                assert!((fd - g[j][k]).abs() <= 1e-6 * fd.abs().max(1.0), "{j},{k}: {fd} vs {}", g[j][k]);
            }
        }
    }
}
