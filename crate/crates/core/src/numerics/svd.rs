use super::{ensure_finite_complex, C64};
use crate::error::{invalid, Error, Result};

const JACOBI_MAX_SWEEPS: usize = 60;

/// Singular values of a row-major complex `rows x cols` matrix, descending.
///
/// One-sided (Hestenes) Jacobi on the narrower orientation; the squared
/// column norms of the converged matrix are the Gram eigenvalues.
pub fn singular_values(rows: usize, cols: usize, m: &[C64]) -> Result<Vec<f64>> {
    if rows == 0 || cols == 0 {
        return Err(invalid("singular_values needs a non-empty matrix"));
    }
    if m.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            found: m.len(),
        });
    }
    ensure_finite_complex(m, "singular_values input")?;

    // Columns of M (or of M† when M is wide), each contiguous.
    let (ncols, len) = if cols <= rows { (cols, rows) } else { (rows, cols) };
    let mut a: Vec<Vec<C64>> = (0..ncols)
        .map(|c| {
            (0..len)
                .map(|r| {
                    if cols <= rows {
                        m[r * cols + c]
                    } else {
                        m[c * cols + r].conj()
                    }
                })
                .collect()
        })
        .collect();

    let mut converged = ncols < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..ncols {
            for q in (p + 1)..ncols {
                let (lo, hi) = a.split_at_mut(q);
                let (ap, aq) = (&mut lo[p], &mut hi[0]);
                let alpha: f64 = ap.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = aq.iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = ap.iter().zip(aq.iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in ap.iter_mut().zip(aq.iter_mut()) {
                    let yq = *y * phase;
                    let xp = *x;
                    *x = xp * c - yq * s;
                    *y = xp * s + yq * c;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "one-sided Jacobi SVD",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    let mut s: Vec<f64> = a
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}
