use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LbfgsConfig {
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_tol")]
    pub value_tol: f64,
    #[serde(default = "default_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: u64,
}

fn default_memory() -> usize {
    10
}
fn default_tol() -> f64 {
    1e-22
}
fn default_max_iter() -> u64 {
    4000
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: default_memory(),
            value_tol: default_tol(),
            grad_tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory < 1 {
            return Err(invalid("L-BFGS memory must be at least 1"));
        }
        if !(self.value_tol >= 0.0 && self.grad_tol >= 0.0) {
            return Err(invalid("L-BFGS tolerances must be non-negative"));
        }
        Ok(())
    }
}

/// Sufficient-decrease and curvature constants of the strong Wolfe conditions.
pub const WOLFE_C1: f64 = 1e-4;
pub const WOLFE_C2: f64 = 0.9;
const LINE_SEARCH_MAX_EVALS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    Running,
    GradTol,
    ValueTol,
    MaxIter,
    LineSearchFailed,
}

impl LbfgsStatus {
    pub fn is_done(self) -> bool {
        self != LbfgsStatus::Running
    }
}

/// Iteration state; `step` advances one accepted iterate at a time.
#[derive(Clone, Debug)]
pub struct Lbfgs {
    pub config: LbfgsConfig,
    pub theta: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: u64,
    pub status: LbfgsStatus,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(a, b)| a + alpha * b).collect()
}

impl Lbfgs {
    pub fn new(config: LbfgsConfig, theta: Vec<f64>, value: f64, grad: Vec<f64>) -> Result<Self> {
        config.validate()?;
        crate::error::ensure_finite(&grad, "L-BFGS gradient")?;
        let status = if max_abs(&grad) < config.grad_tol {
            LbfgsStatus::GradTol
        } else if config.max_iter == 0 {
            LbfgsStatus::MaxIter
        } else {
            LbfgsStatus::Running
        };
        Ok(Self {
            config,
            theta,
            value,
            grad,
            iterations: 0,
            status,
            pairs: VecDeque::new(),
        })
    }

    /// Two-loop recursion: `−H_k g`.
    fn direction(&self) -> Vec<f64> {
        let mut q = self.grad.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in &mut q {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter().map(|x| -x).collect()
    }

    /// One accepted iterate. `f` returns value and gradient.
    pub fn step<F>(&mut self, f: &mut F) -> Result<LbfgsStatus>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        if self.status.is_done() {
            return Ok(self.status);
        }
        let mut p = self.direction();
        let mut slope = dot(&p, &self.grad);
        if !(slope < 0.0) {
            self.pairs.clear();
            p = self.grad.iter().map(|g| -g).collect();
            slope = dot(&p, &self.grad);
        }
        let alpha0 = if self.pairs.is_empty() {
            (1.0 / max_abs(&self.grad)).min(1.0)
        } else {
            1.0
        };
        let found = line_search(f, &self.theta, self.value, slope, &p, alpha0)?;
        let Some((alpha, value, grad)) = found.accepted else {
            if let Some((x, v, g)) = found.best {
                self.theta = x;
                self.value = v;
                self.grad = g;
                self.iterations += 1;
            }
            self.status = LbfgsStatus::LineSearchFailed;
            return Ok(self.status);
        };
        let new_theta = axpy(&self.theta, alpha, &p);
        let s: Vec<f64> = p.iter().map(|x| alpha * x).collect();
        let y: Vec<f64> = grad.iter().zip(&self.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if self.pairs.len() == self.config.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
        let dv = (self.value - value).abs();
        self.theta = new_theta;
        self.value = value;
        self.grad = grad;
        self.iterations += 1;
        self.status = if max_abs(&self.grad) < self.config.grad_tol {
            LbfgsStatus::GradTol
        } else if dv < self.config.value_tol {
            LbfgsStatus::ValueTol
        } else if self.iterations >= self.config.max_iter {
            LbfgsStatus::MaxIter
        } else {
            LbfgsStatus::Running
        };
        Ok(self.status)
    }
}

struct LineSearch {
    accepted: Option<(f64, f64, Vec<f64>)>,
    /// Lowest trial point below the starting value, kept for failures.
    best: Option<(Vec<f64>, f64, Vec<f64>)>,
}

/// Strong-Wolfe bracketing and zoom with safeguarded cubic interpolation.
fn line_search<F>(f: &mut F, x: &[f64], f0: f64, d0: f64, p: &[f64], alpha0: f64) -> Result<LineSearch>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut evals = 0;
    let mut eval = |alpha: f64, best: &mut Option<(Vec<f64>, f64, Vec<f64>)>| -> Result<(f64, f64, Vec<f64>)> {
        let xa = axpy(x, alpha, p);
        // A trial point that overflows the model is just too far along `p`.
        let (v, g) = match f(&xa) {
            Err(Error::NonFinite(_)) => (f64::INFINITY, vec![f64::NAN; xa.len()]),
            r => r?,
        };
        let d = dot(&g, p);
        if v.is_finite() && v < f0 && best.as_ref().is_none_or(|b| v < b.1) {
            *best = Some((xa, v, g.clone()));
        }
        Ok((v, d, g))
    };
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, d0);
    let mut alpha = alpha0;
    let mut bracket = None;
    while evals < LINE_SEARCH_MAX_EVALS {
        evals += 1;
        let (v, d, g) = eval(alpha, &mut best)?;
        if !v.is_finite() || v > f0 + WOLFE_C1 * alpha * d0 || (evals > 1 && v >= f_prev) {
            bracket = Some((a_prev, f_prev, d_prev, alpha, v, d));
            break;
        }
        if d.abs() <= -WOLFE_C2 * d0 {
            return Ok(LineSearch {
                accepted: Some((alpha, v, g)),
                best,
            });
        }
        if d >= 0.0 {
            bracket = Some((alpha, v, d, a_prev, f_prev, d_prev));
            break;
        }
        a_prev = alpha;
        f_prev = v;
        d_prev = d;
        alpha *= 2.0;
    }
    let Some((mut lo, mut f_lo, mut d_lo, mut hi, mut f_hi, mut d_hi)) = bracket else {
        return Ok(LineSearch { accepted: None, best });
    };
    while evals < LINE_SEARCH_MAX_EVALS {
        evals += 1;
        let width = hi - lo;
        if width.abs() <= f64::EPSILON * lo.abs().max(1.0) {
            break;
        }
        let alpha = cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            .filter(|a| {
                let (a_min, a_max) = (lo.min(hi), lo.max(hi));
                let margin = 0.1 * width.abs();
                *a > a_min + margin && *a < a_max - margin
            })
            .unwrap_or(lo + 0.5 * width);
        let (v, d, g) = eval(alpha, &mut best)?;
        if !v.is_finite() || v > f0 + WOLFE_C1 * alpha * d0 || v >= f_lo {
            hi = alpha;
            f_hi = v;
            d_hi = d;
        } else {
            if d.abs() <= -WOLFE_C2 * d0 {
                return Ok(LineSearch {
                    accepted: Some((alpha, v, g)),
                    best,
                });
            }
            if d * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                d_hi = d_lo;
            }
            lo = alpha;
            f_lo = v;
            d_lo = d;
        }
    }
    Ok(LineSearch { accepted: None, best })
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    if !(fa.is_finite() && fb.is_finite() && da.is_finite() && db.is_finite()) {
        return None;
    }
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    pub status: LbfgsStatus,
    /// Objective value after each accepted iterate, starting with θ₀.
    pub values: Vec<f64>,
}

pub fn lbfgs_minimize<F>(mut f: F, theta0: Vec<f64>, config: LbfgsConfig) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (v0, g0) = f(&theta0)?;
    let mut opt = Lbfgs::new(config, theta0, v0, g0)?;
    let mut values = vec![v0];
    while !opt.status.is_done() {
        let before = opt.iterations;
        opt.step(&mut f)?;
        if opt.iterations > before {
            values.push(opt.value);
        }
    }
    Ok(LbfgsResult {
        theta: opt.theta,
        value: opt.value,
        iterations: opt.iterations,
        status: opt.status,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `½ (x − c)ᵀ A (x − c)` with A diagonal plus a rank-one coupling (condition ~ 50).
    fn quadratic(n: usize) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> {
        move |x: &[f64]| {
            let d: Vec<f64> = (0..n).map(|i| x[i] - 1.0 / (1.0 + i as f64)).collect();
            let s: f64 = d.iter().sum();
            let g: Vec<f64> = (0..n).map(|i| (1.0 + 7.0 * i as f64) * d[i] + 0.5 * s).collect();
            let v = 0.5 * d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
            Ok((v, g))
        }
    }

    #[test]
    fn convex_quadratic() {
        let cfg = LbfgsConfig {
            grad_tol: 1e-10,
            value_tol: 0.0,
            ..Default::default()
        };
        let r = lbfgs_minimize(quadratic(8), vec![0.0; 8], cfg).unwrap();
        assert_eq!(r.status, LbfgsStatus::GradTol);
        assert!(r.iterations <= 40, "{}", r.iterations);
        assert!(r.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let r = lbfgs_minimize(f, vec![-1.2, 1.0], LbfgsConfig::default()).unwrap();
        assert!(r.value < 1e-8, "{} after {} ({:?})", r.value, r.iterations, r.status);
        assert!(r.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn already_optimal() {
        let f = |x: &[f64]| Ok((x.iter().map(|v| v * v).sum::<f64>(), x.iter().map(|v| 2.0 * v).collect()));
        let r = lbfgs_minimize(f, vec![0.0; 4], LbfgsConfig::default()).unwrap();
        assert!(r.iterations <= 1);
        assert!(r.theta.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn max_iter_caps_the_run() {
        let cfg = LbfgsConfig {
            max_iter: 3,
            ..Default::default()
        };
        let r = lbfgs_minimize(quadratic(8), vec![0.0; 8], cfg).unwrap();
        assert_eq!(r.iterations, 3);
        assert_eq!(r.status, LbfgsStatus::MaxIter);
    }

    #[test]
    fn line_search_failure_is_flagged() {
        // Gradient that lies about the descent direction.
        let f = |x: &[f64]| Ok((x[0] * x[0], vec![-2.0 * x[0]]));
        let r = lbfgs_minimize(f, vec![1.0], LbfgsConfig::default()).unwrap();
        assert_eq!(r.status, LbfgsStatus::LineSearchFailed);
        assert!(r.value <= 1.0);
    }

    #[test]
    fn overflowing_trial_points_are_backtracked() {
        let f = |x: &[f64]| {
            if x[0] > 3.0 {
                return Err(Error::NonFinite("test overflow"));
            }
            Ok(((x[0] - 2.5).powi(2), vec![2.0 * (x[0] - 2.5)]))
        };
        let r = lbfgs_minimize(f, vec![-40.0], LbfgsConfig::default()).unwrap();
        assert!((r.theta[0] - 2.5).abs() < 1e-8, "{:?}", r);
    }

    #[test]
    fn cubic_interpolation_exact_on_cubics() {
        // f(a) = (a − 0.3)² on [0, 1]: derivative data pins the minimum.
        let t = cubic_min(0.0, 0.09, -0.6, 1.0, 0.49, 1.4).unwrap();
        assert!((t - 0.3).abs() < 1e-12);
    }
}
