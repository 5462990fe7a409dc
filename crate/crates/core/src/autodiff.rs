//! Reverse-mode gradients of an [`Objective`] with respect to ansatz parameters.
//!
//! Losses are composed from a small closed set of primitives whose
//! vector-Jacobian products live in [`primitives`]; the ansatz pullback then
//! carries the wavefunction cotangent back to θ. Cotangents on complex values
//! use `g = ∂L/∂Re z + i ∂L/∂Im z`, so `dL/dθ = Σ Re(conj(g) ∂z/∂θ)`.

use serde::{Deserialize, Serialize};

use crate::ansatz::{forward, pullback, AnsatzSpec};
use crate::error::{ensure_finite, Result};
use crate::objectives::Objective;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradReport {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub max_fd_rel_error: Option<f64>,
}

pub fn grad_objective(spec: &AnsatzSpec, theta: &[f64], objective: &Objective) -> Result<GradReport> {
    let psi = forward(spec, theta)?;
    let (value, cot) = objective.value_and_cotangent(&psi)?;
    let gradient = pullback(spec, theta, &cot)?;
    ensure_finite(&[value], "objective")?;
    Ok(GradReport {
        value,
        gradient,
        max_fd_rel_error: None,
    })
}

pub fn objective_value(spec: &AnsatzSpec, theta: &[f64], objective: &Objective) -> Result<f64> {
    objective.value(&forward(spec, theta)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub step: f64,
    pub coords: usize,
    pub seed: u64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            coords: 32,
            seed: 0,
        }
    }
}

/// Components smaller than `FD_FLOOR · max(1, |L|)` sit at the roundoff
/// resolution of a central difference and are compared against that scale.
pub const FD_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCoord {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub coords: Vec<FdCoord>,
    pub max_rel_error: f64,
}

pub fn rel_error(analytic: f64, numeric: f64, loss: f64) -> f64 {
    let floor = FD_FLOOR * loss.abs().max(1.0);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central differences on a seeded random subset of coordinates.
pub fn fd_check(spec: &AnsatzSpec, theta: &[f64], objective: &Objective, opts: FdOptions) -> Result<FdCheck> {
    let report = grad_objective(spec, theta, objective)?;
    let idx = rng::sample_indices(opts.seed, rng::DOMAIN_GRADCHECK, theta.len(), opts.coords);
    let mut work = theta.to_vec();
    let mut coords = Vec::with_capacity(idx.len());
    for k in idx {
        let orig = work[k];
        work[k] = orig + opts.step;
        let fp = objective_value(spec, &work, objective)?;
        work[k] = orig - opts.step;
        let fm = objective_value(spec, &work, objective)?;
        work[k] = orig;
        let numeric = (fp - fm) / (2.0 * opts.step);
        let analytic = report.gradient[k];
        coords.push(FdCoord {
            index: k,
            analytic,
            numeric,
            rel_error: rel_error(analytic, numeric, report.value),
        });
    }
    let max_rel_error = coords.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    Ok(FdCheck { coords, max_rel_error })
}

/// Gradient plus its finite-difference diagnostic.
pub fn grad_checked(spec: &AnsatzSpec, theta: &[f64], objective: &Objective, opts: FdOptions) -> Result<GradReport> {
    let mut report = grad_objective(spec, theta, objective)?;
    report.max_fd_rel_error = Some(fd_check(spec, theta, objective, opts)?.max_rel_error);
    Ok(report)
}

/// Vector-Jacobian products of the scalar primitives losses are built from.
/// Each takes the upstream real sensitivity `s = ∂L/∂out`.
pub mod primitives {
    use crate::numerics::C64;

    /// `n = Σ|ψ|²`.
    pub fn norm_sqr_vjp(psi: &[C64], s: f64) -> Vec<C64> {
        psi.iter().map(|z| z * (2.0 * s)).collect()
    }

    /// `q = ⟨ψ|H|ψ⟩` for real symmetric H, given `Hψ`.
    pub fn quadratic_form_vjp(hpsi: &[C64], s: f64) -> Vec<C64> {
        hpsi.iter().map(|z| z * (2.0 * s)).collect()
    }

    /// `a = |⟨φ|ψ⟩|²` given the overlap `o = ⟨φ|ψ⟩`.
    pub fn overlap_abs2_vjp(phi: &[C64], o: C64, s: f64) -> Vec<C64> {
        phi.iter().map(|p| o * p * (2.0 * s)).collect()
    }

    /// `r = a / b` → (∂r/∂a, ∂r/∂b) scaled by `s`.
    pub fn ratio_vjp(a: f64, b: f64, s: f64) -> (f64, f64) {
        (s / b, -s * a / (b * b))
    }

    pub fn accumulate(into: &mut [C64], other: &[C64]) {
        for (a, b) in into.iter_mut().zip(other) {
            *a += b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::primitives::*;
    use super::*;
    use crate::ansatz::{param_count, Variant};
    use crate::model::{build_hamiltonian, full_spectrum, Lattice, SpectrumOptions, XxzParams};
    use crate::numerics::{inner, SparseRealMatrix, C64};
    use crate::objectives::{build_ites, ground_target};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Checks a cotangent against central differences of `f` over the real
    /// embedding of `z`.
    fn check_cotangent(z: &[C64], cot: &[C64], f: impl Fn(&[C64]) -> f64) {
        let h = 1e-6;
        for b in 0..z.len() {
            for (part, unit) in [(cot[b].re, C64::new(1.0, 0.0)), (cot[b].im, C64::new(0.0, 1.0))] {
                let mut zp = z.to_vec();
                zp[b] += unit * h;
                let mut zm = z.to_vec();
                zm[b] -= unit * h;
                let fd = (f(&zp) - f(&zm)) / (2.0 * h);
                assert!((fd - part).abs() <= 1e-6 * fd.abs().max(1.0), "{fd} vs {part}");
            }
        }
    }

    #[test]
    fn primitive_norm_sqr() {
        let z = rand_c(6, 1);
        check_cotangent(&z, &norm_sqr_vjp(&z, 1.0), |v| v.iter().map(|x| x.norm_sqr()).sum());
    }

    #[test]
    fn primitive_quadratic_form() {
        let h = SparseRealMatrix::from_triplets(
            4,
            vec![(0, 0, 1.0), (0, 2, -0.5), (2, 0, -0.5), (1, 3, 2.0), (3, 1, 2.0), (3, 3, -1.5)],
        )
        .unwrap();
        let z = rand_c(4, 2);
        let hz = h.spmv(&z).unwrap();
        check_cotangent(&z, &quadratic_form_vjp(&hz, 1.0), |v| inner(v, &h.spmv(v).unwrap()).re);
    }

    #[test]
    fn primitive_overlap() {
        let phi = rand_c(5, 3);
        let z = rand_c(5, 4);
        let o = inner(&phi, &z);
        check_cotangent(&z, &overlap_abs2_vjp(&phi, o, 1.0), |v| inner(&phi, v).norm_sqr());
    }

    #[test]
    fn primitive_ratio() {
        let (a, b) = (0.7, -1.3);
        let (da, db) = ratio_vjp(a, b, 1.0);
        let h = 1e-6;
        assert!((da - ((a + h) / b - (a - h) / b) / (2.0 * h)).abs() < 1e-6);
        assert!((db - (a / (b + h) - a / (b - h)) / (2.0 * h)).abs() < 1e-6);
    }

    #[test]
    fn objective_cotangents() {
        let lat = Lattice::chain(4, true).unwrap();
        let p = XxzParams::uniform(1.0, 0.7, 0.8, 0.1, 4);
        let h = build_hamiltonian(&lat, &p).unwrap();
        let target = rand_c(16, 5);
        let n = target.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let target: Vec<C64> = target.iter().map(|z| z / n).collect();
        let z = rand_c(16, 6);
        for obj in [Objective::Energy(&h), Objective::Infidelity(&target), Objective::NormSquared] {
            let (_, cot) = obj.value_and_cotangent(&z).unwrap();
            check_cotangent(&z, &cot, |v| obj.value(v).unwrap());
        }
    }

    #[test]
    fn sum_of_squares_gradient_is_two_theta() {
        let spec = AnsatzSpec::new(Variant::Vec, Lattice::chain(3, true).unwrap()).unwrap();
        let theta: Vec<f64> = (0..16).map(|k| 0.1 * k as f64 - 0.7).collect();
        let r = grad_objective(&spec, &theta, &Objective::NormSquared).unwrap();
        for (g, t) in r.gradient.iter().zip(&theta) {
            assert_eq!(*g, 2.0 * t);
        }
    }

    fn desk_spectrum(l: usize) -> (SparseRealMatrix, crate::model::Spectrum) {
        let lat = Lattice::chain(l, true).unwrap();
        let p = XxzParams::uniform(1.0, 1.0, 0.8, 0.02, l);
        let h = build_hamiltonian(&lat, &p).unwrap();
        let s = full_spectrum(&h, &lat, &p, SpectrumOptions::default()).unwrap();
        (h, s)
    }

    #[test]
    fn vec_at_the_target_has_zero_gradient() {
        let (_, s) = desk_spectrum(4);
        let g = ground_target(&s);
        let spec = AnsatzSpec::new(Variant::Vec, Lattice::chain(4, true).unwrap()).unwrap();
        let theta: Vec<f64> = g.state.iter().flat_map(|z| [z.re, z.im]).collect();
        let r = grad_objective(&spec, &theta, &Objective::Infidelity(&g.state)).unwrap();
        assert!(r.gradient.iter().all(|x| x.abs() < 1e-10));
        assert!(r.value < 1e-14);
    }

    #[test]
    fn mps_energy_matches_finite_differences() {
        let (h, _) = desk_spectrum(4);
        let spec = AnsatzSpec::new(Variant::Mps { chi: 2 }, Lattice::chain(4, true).unwrap()).unwrap();
        let theta = crate::ansatz::init_params(&spec, 3).unwrap();
        let check = fd_check(&spec, &theta, &Objective::Energy(&h), FdOptions::default()).unwrap();
        assert_eq!(check.coords.len(), 32);
        assert!(check.max_rel_error < 1e-5, "{}", check.max_rel_error);
    }

    #[test]
    fn every_ansatz_and_objective_passes_the_contract() {
        let (h, s) = desk_spectrum(4);
        let g = ground_target(&s);
        let t = build_ites(&s, 0.5, Some(1)).unwrap();
        let chain = Lattice::chain(4, true).unwrap();
        let specs = [
            AnsatzSpec::new(Variant::Mps { chi: 3 }, chain.clone()).unwrap(),
            AnsatzSpec::new(Variant::Nqs { width: 8, depth: 2 }, chain.clone()).unwrap(),
            AnsatzSpec::new(Variant::Vqe { depth: 2 }, chain.clone()).unwrap(),
            AnsatzSpec::new(Variant::Vec, chain).unwrap(),
        ];
        for spec in &specs {
            let theta = crate::ansatz::init_params(spec, 11).unwrap();
            for obj in [Objective::Energy(&h), Objective::Infidelity(&g.state), Objective::Infidelity(&t.state)] {
                let r = grad_checked(spec, &theta, &obj, FdOptions::default()).unwrap();
                let err = r.max_fd_rel_error.unwrap();
                assert!(err < 1e-5, "{:?} {}: {err}", spec.variant, obj.name());
            }
        }
    }

    #[test]
    fn energy_is_flat_along_scaling_directions() {
        let (h, _) = desk_spectrum(4);
        let chain = Lattice::chain(4, true).unwrap();
        let vec_spec = AnsatzSpec::new(Variant::Vec, chain.clone()).unwrap();
        let theta = crate::ansatz::init_params(&vec_spec, 1).unwrap();
        let r = grad_objective(&vec_spec, &theta, &Objective::Energy(&h)).unwrap();
        let dir: f64 = r.gradient.iter().zip(theta.iter()).map(|(g, t)| g * t).sum();
        assert!(dir.abs() < 1e-10);

        let mps = AnsatzSpec::new(Variant::Mps { chi: 2 }, chain).unwrap();
        let theta = crate::ansatz::init_params(&mps, 2).unwrap();
        let r = grad_objective(&mps, &theta, &Objective::Energy(&h)).unwrap();
        // Scaling tensor 1 alone scales ψ.
        let block = param_count(&mps) / 4;
        let dir: f64 = (block..2 * block).map(|k| r.gradient[k] * theta[k]).sum();
        assert!(dir.abs() < 1e-10, "{dir}");
    }
}
