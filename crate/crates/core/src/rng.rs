//! Seeded ChaCha20 streams. A `(seed, domain)` pair always yields the same
//! sequence on every platform; different domains never share a stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Parameter initialization.
pub const DOMAIN_INIT: u64 = 0x1;
/// Random phases of ITES targets.
pub const DOMAIN_PHASES: u64 = 0x2;
/// Coordinate subsets for finite-difference checks.
pub const DOMAIN_GRADCHECK: u64 = 0x3;

pub fn stream(seed: u64, domain: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(domain);
    rng
}

pub fn normal_vec(seed: u64, domain: u64, len: usize, std: f64) -> Vec<f64> {
    let mut rng = stream(seed, domain);
    (0..len)
        .map(|_| std * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn uniform_vec(seed: u64, domain: u64, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = stream(seed, domain);
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// `count` distinct indices from `0..n` (all of them when `count >= n`), sorted.
pub fn sample_indices(seed: u64, domain: u64, n: usize, count: usize) -> Vec<usize> {
    let mut rng = stream(seed, domain);
    let mut idx = rand::seq::index::sample(&mut rng, n, count.min(n)).into_vec();
    idx.sort_unstable();
    idx
}
