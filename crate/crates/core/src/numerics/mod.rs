//! Dense and sparse linear-algebra kernels plus the least-squares line fit.
//!
//! Everything here is `f64`. Complex vectors use [`num_complex::Complex64`],
//! whose `#[repr(C)]` layout is the interleaved `(re, im)` pair sequence.

mod eig;
mod fit;
mod sparse;
mod svd;

pub use eig::{sym_eig, SymEig, EIG_MAX_SWEEPS};
pub use fit::{ols_line, LineFit};
pub use sparse::SparseRealMatrix;
pub use svd::singular_values;

use num_complex::Complex64;

use crate::error::{ensure_finite, invalid, Result};

pub type C64 = Complex64;

/// Dense real symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSymMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl RealSymMatrix {
    /// Builds the matrix from row-major entries, replacing it by `(A + Aᵀ)/2`
    /// so that symmetry holds exactly.
    pub fn new(n: usize, mut entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        ensure_finite(&entries, "symmetric matrix")?;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (entries[i * n + j] + entries[j * n + i]);
                entries[i * n + j] = avg;
                entries[j * n + i] = avg;
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(n, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// ⟨a|b⟩ with the first argument conjugated.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn ensure_finite_complex(values: &[C64], what: &'static str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite(what))
    }
}
