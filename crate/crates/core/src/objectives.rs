//! Energy and infidelity losses, and the target states they compare against.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Spectrum;
use crate::numerics::{ensure_finite_complex, inner, norm_sqr, SparseRealMatrix, C64};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    GroundState,
    Ites,
}

/// A normalized target wavefunction together with its eigenbasis coefficients.
#[derive(Clone, Debug)]
pub struct TargetState {
    pub kind: TargetKind,
    /// Imaginary time; infinite for the ground-state target.
    pub beta: f64,
    pub phase_seed: Option<u64>,
    pub coefficients: Vec<C64>,
    pub state: Vec<C64>,
}

impl TargetState {
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }
}

pub fn ground_target(spectrum: &Spectrum) -> TargetState {
    let mut coefficients = vec![C64::new(0.0, 0.0); spectrum.dim()];
    coefficients[spectrum.ground_index()] = C64::new(1.0, 0.0);
    TargetState {
        kind: TargetKind::GroundState,
        beta: f64::INFINITY,
        phase_seed: None,
        coefficients,
        state: spectrum.eigenvector(spectrum.ground_index()),
    }
}

/// `|φ(β)⟩ = Σ_i e^{iω_i} e^{−βε_i/2} |ε_i⟩ / Z`, with optional random phases ω_i.
///
/// Exponents are shifted by the ground energy so large β collapses onto the
/// lowest multiplet instead of underflowing to zero.
pub fn build_ites(spectrum: &Spectrum, beta: f64, phase_seed: Option<u64>) -> Result<TargetState> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(format!("ITES needs a finite β ≥ 0, got {beta}")));
    }
    let e = spectrum.energies();
    let e0 = e[spectrum.ground_index()];
    let amps: Vec<f64> = e.iter().map(|&ei| (-0.5 * beta * (ei - e0)).exp()).collect();
    let z = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let phases = phase_seed.map(|s| {
        rng::uniform_vec(s, rng::DOMAIN_PHASES, e.len(), 0.0, std::f64::consts::TAU)
    });
    let coefficients: Vec<C64> = amps
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let c = C64::new(a / z, 0.0);
            match &phases {
                Some(w) => c * C64::from_polar(1.0, w[i]),
                None => c,
            }
        })
        .collect();
    let mut state = spectrum.synthesize(&coefficients)?;
    let n = norm_sqr(&state).sqrt();
    for z in &mut state {
        *z /= n;
    }
    Ok(TargetState {
        kind: TargetKind::Ites,
        beta,
        phase_seed,
        coefficients,
        state,
    })
}

fn nonzero_norm(psi: &[C64], what: &'static str) -> Result<f64> {
    ensure_finite_complex(psi, what)?;
    let n = norm_sqr(psi);
    if n > 0.0 && n.is_finite() {
        Ok(n)
    } else {
        Err(Error::ZeroVector(what))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Rayleigh quotient `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn energy(psi: &[C64], h: &SparseRealMatrix) -> Result<f64> {
    let n = nonzero_norm(psi, "energy")?;
    let hpsi = h.spmv(psi)?;
    rayleigh(psi, &hpsi, n)
}

fn rayleigh(psi: &[C64], hpsi: &[C64], n: f64) -> Result<f64> {
    let q = inner(psi, hpsi);
    let scale: f64 = psi.iter().zip(hpsi).map(|(a, b)| a.norm() * b.norm()).sum();
    if q.im.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(invalid(format!("⟨ψ|H|ψ⟩ has imaginary part {:.3e}", q.im)));
    }
    Ok(q.re / n)
}

/// `1 − |⟨φ|ψ⟩|² / ⟨ψ|ψ⟩` for a normalized target φ, clamped to [0, 1].
pub fn infidelity(psi: &[C64], target: &TargetState) -> Result<f64> {
    infidelity_vs(psi, &target.state)
}

pub fn infidelity_vs(psi: &[C64], target: &[C64]) -> Result<f64> {
    check_dim(target.len(), psi.len())?;
    let n = nonzero_norm(psi, "infidelity")?;
    Ok((1.0 - inner(target, psi).norm_sqr() / n).clamp(0.0, 1.0))
}

/// The closed set of losses the optimizer can differentiate.
#[derive(Clone, Copy, Debug)]
pub enum Objective<'a> {
    Energy(&'a SparseRealMatrix),
    /// Infidelity against a normalized target.
    Infidelity(&'a [C64]),
    /// `⟨ψ|ψ⟩`; a diagnostic loss.
    NormSquared,
}

impl Objective<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Energy(_) => "energy",
            Objective::Infidelity(_) => "infidelity",
            Objective::NormSquared => "norm_squared",
        }
    }

    pub fn value(&self, psi: &[C64]) -> Result<f64> {
        match *self {
            Objective::Energy(h) => energy(psi, h),
            Objective::Infidelity(t) => infidelity_vs(psi, t),
            Objective::NormSquared => {
                ensure_finite_complex(psi, "norm")?;
                Ok(norm_sqr(psi))
            }
        }
    }

    /// Loss and its cotangent `∂L/∂Re ψ + i ∂L/∂Im ψ`.
    pub fn value_and_cotangent(&self, psi: &[C64]) -> Result<(f64, Vec<C64>)> {
        use crate::autodiff::primitives as p;
        match *self {
            Objective::Energy(h) => {
                check_dim(h.dim(), psi.len())?;
                let n = nonzero_norm(psi, "energy")?;
                let hpsi = h.spmv(psi)?;
                let e = rayleigh(psi, &hpsi, n)?;
                // E = q / n
                let (dq, dn) = p::ratio_vjp(e * n, n, 1.0);
                let mut g = p::quadratic_form_vjp(&hpsi, dq);
                p::accumulate(&mut g, &p::norm_sqr_vjp(psi, dn));
                Ok((e, g))
            }
            Objective::Infidelity(t) => {
                check_dim(t.len(), psi.len())?;
                let n = nonzero_norm(psi, "infidelity")?;
                let o = inner(t, psi);
                let f = o.norm_sqr() / n;
                // L = 1 − |o|² / n
                let (da, dn) = p::ratio_vjp(o.norm_sqr(), n, -1.0);
                let mut g = p::overlap_abs2_vjp(t, o, da);
                p::accumulate(&mut g, &p::norm_sqr_vjp(psi, dn));
                Ok(((1.0 - f).clamp(0.0, 1.0), g))
            }
            Objective::NormSquared => Ok((self.value(psi)?, p::norm_sqr_vjp(psi, 1.0))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, full_spectrum, Lattice, SpectrumOptions, XxzParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desk(l: usize) -> (SparseRealMatrix, Spectrum) {
        let lat = Lattice::chain(l, true).unwrap();
        let p = XxzParams::uniform(1.0, 1.0, 0.8, 0.02, l);
        let h = build_hamiltonian(&lat, &p).unwrap();
        let s = full_spectrum(&h, &lat, &p, SpectrumOptions::default()).unwrap();
        (h, s)
    }

    fn random_state(dim: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn eigenvector_energies() {
        let (h, s) = desk(6);
        for k in [0, 7, 40, 63] {
            let e = energy(&s.eigenvector(k), &h).unwrap();
            assert!((e - s.energies()[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn energy_matches_dense_quadratic_form() {
        let (h, _) = desk(6);
        let dense = h.to_dense().unwrap();
        let psi = random_state(64, 1);
        let mut num = C64::new(0.0, 0.0);
        for i in 0..64 {
            for j in 0..64 {
                num += psi[i].conj() * dense.get(i, j) * psi[j];
            }
        }
        let den: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        assert!((energy(&psi, &h).unwrap() - num.re / den).abs() < 1e-11);
        let scaled: Vec<C64> = psi.iter().map(|z| z * C64::new(-2.5, 0.7)).collect();
        assert!((energy(&scaled, &h).unwrap() - energy(&psi, &h).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_rejected() {
        let (h, s) = desk(4);
        let zero = vec![C64::new(0.0, 0.0); 16];
        assert!(matches!(energy(&zero, &h), Err(Error::ZeroVector(_))));
        assert!(infidelity(&zero, &ground_target(&s)).is_err());
    }

    #[test]
    fn ites_at_zero_beta_is_uniform() {
        let (_, s) = desk(6);
        let t = build_ites(&s, 0.0, None).unwrap();
        assert!(t.weights().iter().all(|w| (w - 1.0 / 64.0).abs() < 1e-15));
        assert!((norm_sqr(&t.state) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ites_energy_is_the_gibbs_average() {
        let (h, s) = desk(8);
        for (beta, seed) in [(0.3, None), (1.7, Some(5))] {
            let t = build_ites(&s, beta, seed).unwrap();
            let e = s.energies();
            let num: f64 = e.iter().map(|x| x * (-beta * x).exp()).sum();
            let den: f64 = e.iter().map(|x| (-beta * x).exp()).sum();
            assert!((energy(&t.state, &h).unwrap() - num / den).abs() < 1e-10);
            // Eigenbasis weights come back exactly.
            let c = s.overlaps(&t.state).unwrap();
            for (i, ci) in c.iter().enumerate() {
                assert!((ci.norm_sqr() - (-beta * e[i]).exp() / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phases_change_state_not_weights() {
        let (_, s) = desk(6);
        let a = build_ites(&s, 0.5, Some(1)).unwrap();
        let b = build_ites(&s, 0.5, Some(2)).unwrap();
        let plain = build_ites(&s, 0.5, None).unwrap();
        for (x, y) in a.weights().iter().zip(plain.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(infidelity(&a.state, &b).unwrap() > 1e-3);
        assert_eq!(build_ites(&s, 0.5, Some(1)).unwrap().state, a.state);
    }

    #[test]
    fn large_beta_reduces_to_ground_state() {
        let (_, s) = desk(8);
        assert!(s.energies()[1] - s.energies()[0] > 0.1);
        let g = ground_target(&s);
        let t50 = build_ites(&s, 50.0, None).unwrap();
        assert!(1.0 - infidelity(&t50.state, &g).unwrap() > 1.0 - 1e-8);
        let t100 = build_ites(&s, 100.0, None).unwrap();
        for seed in 0..5 {
            let psi = random_state(256, seed);
            let a = infidelity(&psi, &t100).unwrap();
            let b = infidelity(&psi, &g).unwrap();
            assert!((a - b).abs() < 1e-8);
        }
        assert!(build_ites(&s, -1.0, None).is_err());
        assert!(build_ites(&s, 1e6, None).is_ok());
    }

    #[test]
    fn infidelity_trivial_cases() {
        let (_, s) = desk(6);
        let g = ground_target(&s);
        let scaled: Vec<C64> = g.state.iter().map(|z| z * C64::from_polar(3.0, 1.1)).collect();
        assert!(infidelity(&scaled, &g).unwrap() < 1e-12);
        assert!((infidelity(&s.eigenvector(5), &g).unwrap() - 1.0).abs() < 1e-12);
        let psi = random_state(64, 9);
        let rotated: Vec<C64> = psi.iter().map(|z| z * C64::from_polar(1.0, 2.3)).collect();
        assert!((infidelity(&psi, &g).unwrap() - infidelity(&rotated, &g).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn objective_values_agree_with_free_functions() {
        let (h, s) = desk(6);
        let psi = random_state(64, 4);
        let t = build_ites(&s, 0.5, Some(3)).unwrap();
        let (e, _) = Objective::Energy(&h).value_and_cotangent(&psi).unwrap();
        assert!((e - energy(&psi, &h).unwrap()).abs() < 1e-14);
        let (f, _) = Objective::Infidelity(&t.state).value_and_cotangent(&psi).unwrap();
        assert!((f - infidelity(&psi, &t).unwrap()).abs() < 1e-14);
        assert!(Objective::Energy(&h).value_and_cotangent(&psi[..32]).is_err());
    }
}
