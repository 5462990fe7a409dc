use super::{RealSymMatrix, C64};
use crate::error::{ensure_finite, invalid, Error, Result};

/// Compressed-row real matrix. Column indices are sorted and unique per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRealMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRealMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros that result are kept so the pattern stays symmetric.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= n || *c >= n) {
            return Err(invalid(format!("triplet ({r}, {c}) outside {n}x{n}")));
        }
        if triplets.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::NonFinite("sparse triplets"));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..n {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_offsets: vec![0; n + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        match self.col_indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = S x`.
    pub fn spmv(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += x[self.col_indices[k]] * self.values[k];
            }
            *out = acc;
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("sparse matvec output"));
        }
        Ok(())
    }

    /// Dense restriction to the given (sorted) basis indices.
    pub fn dense_block(&self, indices: &[usize]) -> Result<RealSymMatrix> {
        let d = indices.len();
        let mut entries = vec![0.0; d * d];
        let mut position = std::collections::HashMap::with_capacity(d);
        for (k, &b) in indices.iter().enumerate() {
            position.insert(b, k);
        }
        for (i, &b) in indices.iter().enumerate() {
            for (c, v) in self.row(b) {
                if let Some(&j) = position.get(&c) {
                    entries[i * d + j] = v;
                }
            }
        }
        ensure_finite(&entries, "dense block")?;
        RealSymMatrix::new(d, entries)
    }

    pub fn to_dense(&self) -> Result<RealSymMatrix> {
        let all: Vec<usize> = (0..self.n).collect();
        self.dense_block(&all)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, _)| self.row(c).any(|(cc, _)| cc == r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn random_sparse(n: usize, rng: &mut ChaCha8Rng) -> (SparseRealMatrix, Vec<f64>) {
        let mut dense = vec![0.0; n * n];
        let mut trip = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.random_bool(0.15) || i == j {
                    let v = rng.random_range(-2.0..2.0);
                    dense[i * n + j] = v;
                    dense[j * n + i] = v;
                    trip.push((i, j, v));
                    if i != j {
                        trip.push((j, i, v));
                    }
                }
            }
        }
        (SparseRealMatrix::from_triplets(n, trip).unwrap(), dense)
    }

    #[test]
    fn zero_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_vec(9, &mut rng);
        let z = SparseRealMatrix::zeros(9).spmv(&x).unwrap();
        assert!(z.iter().all(|v| *v == C64::new(0.0, 0.0)));
        assert_eq!(SparseRealMatrix::identity(9).spmv(&x).unwrap(), x);
    }

    #[test]
    fn matches_dense_multiply() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (s, dense) = random_sparse(32, &mut rng);
        assert!(s.is_structurally_symmetric());
        let x = random_vec(32, &mut rng);
        let y = s.spmv(&x).unwrap();
        for i in 0..32 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..32 {
                acc += x[j] * dense[i * 32 + j];
            }
            assert!((acc - y[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let s = SparseRealMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0)])
            .unwrap();
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = SparseRealMatrix::identity(4);
        assert!(matches!(
            s.spmv(&[C64::new(1.0, 0.0); 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn spmv_is_linear(seed in 0u64..5000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (s, _) = random_sparse(16, &mut rng);
            let x = random_vec(16, &mut rng);
            let y = random_vec(16, &mut rng);
            let combo: Vec<C64> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
            let lhs = s.spmv(&combo).unwrap();
            let sx = s.spmv(&x).unwrap();
            let sy = s.spmv(&y).unwrap();
            for i in 0..16 {
                proptest::prop_assert!((lhs[i] - (sx[i] * a + sy[i] * b)).norm() < 1e-12);
            }
        }
    }
}
