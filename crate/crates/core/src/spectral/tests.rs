use super::*;
use crate::model::{build_hamiltonian, full_spectrum, Lattice, SpectrumOptions, XxzParams};
use crate::numerics::inner;
use crate::objectives::build_ites;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk(l: usize) -> Spectrum {
    let lat = Lattice::chain(l, true).unwrap();
    let p = XxzParams::uniform(1.0, 1.0, 0.8, 0.02, l);
    let h = build_hamiltonian(&lat, &p).unwrap();
    full_spectrum(&h, &lat, &p, SpectrumOptions::default()).unwrap()
}

fn entry(energy: f64, weight: f64, sector: i32) -> DecompEntry {
    DecompEntry {
        energy,
        weight,
        sector: Some(sector),
        multiplicity: 1,
        contains_ground: false,
    }
}

fn synthetic(entries: Vec<DecompEntry>) -> Decomposition {
    Decomposition {
        entries,
        source_norm: 1.0,
        sector_filter: None,
        renormalized_within_sector: false,
    }
}

fn random_state(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Independent OLS slope/intercept from the closed-form sums.
fn oracle_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

#[test]
fn eigenstate_decomposes_to_a_delta() {
    let s = desk(6);
    let d = decompose(&s.eigenvector(9), &s, None).unwrap();
    for (i, e) in d.entries.iter().enumerate() {
        let want = if i == 9 { 1.0 } else { 0.0 };
        assert!((e.weight - want).abs() < 1e-12);
    }
    assert!(d.entries[0].contains_ground && !d.entries[1].contains_ground);
}

#[test]
fn ites_weights_and_parseval() {
    let s = desk(8);
    let beta = 0.7;
    let t = build_ites(&s, beta, Some(4)).unwrap();
    let scaled: Vec<C64> = t.state.iter().map(|z| z * 3.0).collect();
    let d = decompose(&scaled, &s, None).unwrap();
    let z2: f64 = s.energies().iter().map(|e| (-beta * e).exp()).sum();
    for (e, w) in s.energies().iter().zip(d.weights()) {
        assert!((w - (-beta * e).exp() / z2).abs() < 1e-12);
    }
    assert!((d.total_weight() - 1.0).abs() < 1e-12);
    assert!((d.source_norm - 3.0).abs() < 1e-12);
    let zero = vec![C64::new(0.0, 0.0); 256];
    assert!(decompose(&zero, &s, None).is_err());
}

#[test]
fn sector_filter() {
    let s = desk(6);
    let psi = random_state(64, 1);
    let raw = decompose(&psi, &s, Some(SectorFilter { m: 0, renormalize: false })).unwrap();
    assert_eq!(raw.entries.len(), 20);
    assert!(raw.entries.iter().all(|e| e.sector == Some(0)));
    // Half-filling weight equals the squared norm of the Sz=0 components.
    let direct: f64 = psi
        .iter()
        .enumerate()
        .filter(|(b, _)| b.count_ones() == 3)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        / psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    assert!((raw.total_weight() - direct).abs() < 1e-12);
    let renorm = decompose(&psi, &s, Some(SectorFilter { m: 0, renormalize: true })).unwrap();
    assert!((renorm.total_weight() - 1.0).abs() < 1e-12);
    assert!(renorm.renormalized_within_sector);
    assert_eq!(renorm.sector_filter, Some(0));
}

#[test]
fn aggregation_examples() {
    let plain = synthetic(vec![entry(0.0, 0.5, 0), entry(1.0, 0.3, 2), entry(2.0, 0.2, 0)]);
    assert_eq!(aggregate_degenerate(&plain, 1e-10), plain);
    let triplet = synthetic(vec![entry(-1.0, 0.4, 0), entry(0.5, 0.1, 2), entry(0.5, 0.2, 0), entry(0.5, 0.3, -2)]);
    let agg = aggregate_degenerate(&triplet, 1e-10);
    assert_eq!(agg.entries.len(), 2);
    assert!((agg.entries[1].weight - 0.6).abs() < 1e-15);
    assert_eq!(agg.entries[1].multiplicity, 3);
    assert_eq!(agg.entries[1].sector, None);
    let same = synthetic(vec![entry(0.0, 0.1, 2), entry(0.0, 0.2, 2), entry(1.0, 0.7, 0)]);
    assert_eq!(aggregate_degenerate(&same, 1e-10).entries[0].sector, Some(2));
}

#[test]
fn aggregation_is_basis_independent_inside_a_multiplet() {
    let s = desk(8);
    let e = s.energies();
    let k = (1..e.len()).find(|&k| (e[k] - e[k - 1]).abs() < 1e-12 && s.sector_labels()[k] == s.sector_labels()[k - 1]).unwrap();
    let (v1, v2) = (s.eigenvector(k - 1), s.eigenvector(k));
    let psi = random_state(256, 2);
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let base = decompose(&psi, &s, None).unwrap();
    let mut rotated = base.clone();
    let t: f64 = 0.83;
    let r1: Vec<C64> = v1.iter().zip(&v2).map(|(a, b)| a * t.cos() + b * t.sin()).collect();
    let r2: Vec<C64> = v1.iter().zip(&v2).map(|(a, b)| -a * t.sin() + b * t.cos()).collect();
    rotated.entries[k - 1].weight = inner(&r1, &psi).norm_sqr() / n;
    rotated.entries[k].weight = inner(&r2, &psi).norm_sqr() / n;
    assert!((rotated.entries[k].weight - base.entries[k].weight).abs() > 1e-6);
    let a = aggregate_degenerate(&base, 1e-10);
    let b = aggregate_degenerate(&rotated, 1e-10);
    for (x, y) in a.entries.iter().zip(&b.entries) {
        assert!((x.weight - y.weight).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn aggregation_preserves_total_weight(
        raw in prop::collection::vec((0u8..6, 0.0f64..1.0), 1..40)
    ) {
        let mut entries: Vec<DecompEntry> = raw.iter().map(|&(e, w)| entry(e as f64 * 0.5, w, 0)).collect();
        entries.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let d = synthetic(entries);
        let agg = aggregate_degenerate(&d, 1e-10);
        prop_assert!((agg.total_weight() - d.total_weight()).abs() < 1e-12);
        prop_assert_eq!(agg.entries.iter().map(|e| e.multiplicity).sum::<usize>(), d.entries.len());
    }

    #[test]
    fn beta_tilde_ignores_uniform_rescaling(c in 1e-6f64..1e6, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<DecompEntry> = (0..12)
            .map(|k| entry(k as f64 * 0.3, rng.random_range(1e-4..1.0), 0))
            .collect();
        let d = synthetic(entries);
        let mut scaled = d.clone();
        for e in &mut scaled.entries {
            e.weight *= c;
        }
        let opts = FitOptions::default();
        let a = fit_efftemp(&d, &opts).unwrap();
        let b = fit_efftemp(&scaled, &opts).unwrap();
        prop_assert!((a.beta_tilde - b.beta_tilde).abs() < 1e-12 * a.beta_tilde.abs().max(1.0));
    }
}

#[test]
fn exact_ites_fit_recovers_beta() {
    let s = desk(8);
    let opts = FitOptions::default();
    let mut last_lambda = f64::INFINITY;
    for k in 0..=20 {
        let beta = 0.1 * k as f64;
        let t = build_ites(&s, beta, Some(k)).unwrap();
        let fit = fit_efftemp(&decompose(&t.state, &s, None).unwrap(), &opts).unwrap();
        assert!((fit.beta_tilde - beta).abs() < 1e-8, "β={beta}: {}", fit.beta_tilde);
        assert!(fit.r_squared >= 1.0 - 1e-10, "β={beta}: r² {}", fit.r_squared);
        assert!(fit.lambda <= last_lambda * (1.0 + 1e-12));
        last_lambda = fit.lambda;
    }
    let uniform = fit_efftemp(&decompose(&build_ites(&s, 0.0, None).unwrap().state, &s, None).unwrap(), &opts).unwrap();
    assert!(uniform.beta_tilde.abs() < 1e-10);
    assert!((uniform.lambda - 1.0 / 256.0).abs() < 1e-14);
}

#[test]
fn fit_matches_oracle_and_points_are_filtered() {
    let s = desk(6);
    let psi = random_state(64, 3);
    let d = decompose(&psi, &s, None).unwrap();
    let opts = FitOptions {
        aggregate: false,
        ..Default::default()
    };
    let fit = fit_efftemp(&d, &opts).unwrap();
    let x: Vec<f64> = d.entries[1..].iter().map(|e| e.energy).collect();
    let y: Vec<f64> = d.entries[1..].iter().map(|e| e.weight.ln()).collect();
    let (slope, intercept) = oracle_line(&x, &y);
    assert!((fit.beta_tilde + slope).abs() < 1e-10);
    assert!((fit.lambda - intercept.exp()).abs() < 1e-10 * intercept.exp());
    assert_eq!(fit.points_used, 63);
    let floored = FitOptions {
        weight_floor: 0.01,
        ..opts
    };
    let kept = d.entries[1..].iter().filter(|e| e.weight > 0.01).count();
    assert_eq!(fit_efftemp(&d, &floored).unwrap().points_used, kept);
}

#[test]
fn plateau_bends_the_slope() {
    // Exponential at β=0.9 below the median energy, flat above.
    let energies: Vec<f64> = (0..40).map(|k| -3.0 + 0.15 * k as f64).collect();
    let median = 0.5 * (energies[19] + energies[20]);
    let floor = (-0.9 * median).exp();
    let entries: Vec<DecompEntry> = energies
        .iter()
        .map(|&e| entry(e, if e < median { (-0.9 * e).exp() } else { floor }, 0))
        .collect();
    let d = synthetic(entries);
    let opts = FitOptions {
        exclude_ground: false,
        ..Default::default()
    };
    let fit = fit_efftemp(&d, &opts).unwrap();
    let y: Vec<f64> = d.weights().iter().map(|w| w.ln()).collect();
    let (slope, _) = oracle_line(&energies, &y);
    assert!((fit.beta_tilde + slope).abs() < 1e-12);
    assert!(fit.beta_tilde > 0.0 && fit.beta_tilde < 0.9);
    assert!(fit.r_squared < 0.9, "r² {}", fit.r_squared);
}

#[test]
fn too_few_points_rejected() {
    let d = synthetic(vec![entry(0.0, 0.5, 0), entry(1.0, 0.3, 0), entry(2.0, 0.0, 0), entry(3.0, 0.2, 0)]);
    let mut opts = FitOptions::default();
    assert_eq!(fit_efftemp(&d, &opts).unwrap().points_used, 3);
    opts.weight_floor = 0.25;
    assert!(fit_efftemp(&d, &opts).is_err());
}

#[test]
fn scatter_rows_follow_fit_usage() {
    let s = desk(6);
    let psi = random_state(64, 7);
    let d = decompose(&psi, &s, None).unwrap();
    let rows = scatter_rows(&d, &FitOptions::default());
    assert_eq!(rows.len(), 64);
    assert!(!rows[0].used_in_fit);
    assert_eq!(rows.iter().filter(|r| r.used_in_fit).count(), 63);
}

#[test]
fn mse_cases() {
    let s = desk(6);
    let a = decompose(&random_state(64, 1), &s, None).unwrap();
    let b = decompose(&random_state(64, 2), &s, None).unwrap();
    assert_eq!(mse_vs_target(&a, &a).unwrap().mse, 0.0);
    let delta: f64 = 0.37;
    let mut shifted = a.clone();
    for e in &mut shifted.entries {
        e.weight *= delta.exp();
    }
    assert!((mse_vs_target(&shifted, &a).unwrap().mse - delta * delta).abs() < 1e-12);
    let direct: f64 = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(p, q)| (p.weight.ln() - q.weight.ln()).powi(2))
        .sum::<f64>()
        / 64.0;
    assert!((mse_vs_target(&a, &b).unwrap().mse - direct).abs() < 1e-12);
    let mut zeroed = a.clone();
    zeroed.entries[3].weight = 0.0;
    let r = mse_vs_target(&zeroed, &a).unwrap();
    assert!(r.mse.is_finite());
    assert_eq!(r.clamped, 1);
    let agg = aggregate_degenerate(&a, 1e-10);
    assert!(mse_vs_target(&agg, &agg).is_err());
}

#[test]
fn beta_star_rules() {
    let grid: Vec<f64> = (1..=12).map(|k| 0.1 * k as f64).collect();
    let exact: Vec<Option<f64>> = grid.iter().map(|&b| Some(b)).collect();
    assert_eq!(detect_beta_star(&grid, &exact, 0.05), None);
    let capped: Vec<Option<f64>> = grid.iter().map(|&b| Some(b.min(0.5))).collect();
    let star = detect_beta_star(&grid, &capped, 0.05).unwrap();
    assert!((star - 0.6).abs() < 1e-12);
    let mut blip = exact.clone();
    blip[4] = Some(0.2);
    assert_eq!(detect_beta_star(&grid, &blip, 0.05), None);
    let mut gap = capped.clone();
    gap[8] = None;
    assert!((detect_beta_star(&grid, &gap, 0.05).unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn sweep_validates_grid() {
    let point = |beta: f64| SweepPoint {
        beta,
        fit: None,
        final_infidelity: None,
        error: None,
    };
    assert!(SweepResult::new(vec![point(0.2), point(0.1)], 0.05).is_err());
    assert!(SweepResult::new(vec![], 0.05).is_err());
    assert_eq!(SweepResult::new(vec![point(0.1)], 0.05).unwrap().beta_star, None);
}

#[test]
fn entropy_cases() {
    // Product state: every site in (|0⟩ + 2|1⟩)/√5.
    let product: Vec<C64> = (0..16usize).map(|b| C64::new(2f64.powi(b.count_ones() as i32), 0.0)).collect();
    assert!(entanglement_entropy(&product, 2).unwrap().abs() < 1e-12);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = [C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)];
    assert!((entanglement_entropy(&singlet, 1).unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!(entanglement_entropy(&singlet, 0).is_err());
    assert!(entanglement_entropy(&singlet, 2).is_err());
}

fn random_unitary(n: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = (0..n).map(|k| random_state(n, seed * 100 + k as u64)).collect();
    for k in 0..n {
        for j in 0..k {
            let p = inner(&cols[j].clone(), &cols[k]);
            let cj = cols[j].clone();
            for (a, b) in cols[k].iter_mut().zip(&cj) {
                *a -= p * b;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut cols[k] {
            *a /= norm;
        }
    }
    cols
}

#[test]
fn entropy_invariant_under_right_block_unitary() {
    let (l, la) = (6, 2);
    let psi = random_state(1 << l, 5);
    let nb = 1 << (l - la);
    let u = random_unitary(nb, 6);
    let mut out = vec![C64::new(0.0, 0.0); 1 << l];
    for a in 0..1usize << la {
        for r in 0..nb {
            for c in 0..nb {
                out[a | (r << la)] += u[c][r] * psi[a | (c << la)];
            }
        }
    }
    let before = entanglement_entropy(&psi, la).unwrap();
    let after = entanglement_entropy(&out, la).unwrap();
    assert!((before - after).abs() < 1e-10);
    assert!(before > 0.1);
}
