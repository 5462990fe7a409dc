use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, invalid, Error, Result};

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Below this y-variance the data counts as flat: r² and the slope error are 0.
const FLAT_Y_VARIANCE: f64 = 1e-300;

pub fn ols_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(invalid(format!("line fit needs at least 3 points, got {n}")));
    }
    ensure_finite(x, "fit abscissae")?;
    ensure_finite(y, "fit ordinates")?;
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 || sxx / nf <= f64::MIN_POSITIVE {
        return Err(invalid("line fit with all abscissae equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if syy / nf < FLAT_Y_VARIANCE {
        return Ok(LineFit {
            slope,
            intercept,
            slope_stderr: 0.0,
            r_squared: 0.0,
        });
    }
    let r_squared = ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0);
    // Residual sum of squares computed directly; the sxx·syy form cancels badly near r²=1.
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    let slope_stderr = if n > 2 {
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}
