use efftemp::ansatz::{forward, init_params, AnsatzSpec, Variant};
use efftemp::io::{decode_checkpoint, decode_spectrum, encode_checkpoint, encode_spectrum, Checkpoint, SpectrumHeader};
use efftemp::model::{build_hamiltonian, full_spectrum, Lattice, Spectrum, SpectrumOptions, XxzParams};
use efftemp::numerics::{inner, norm_sqr, C64};
use efftemp::objectives::{build_ites, energy, ground_target, infidelity_vs, Objective};
use efftemp::optimize::defaults::table_adam;
use efftemp::optimize::{train, AdamConfig, Monitor, OptimizerConfig, Schedule, TrainConfig};
use efftemp::spectral::{decompose, entanglement_entropy, fit_efftemp, FitOptions};
use proptest::prelude::*;

fn chain(l: usize) -> (Lattice, XxzParams, Spectrum, efftemp::numerics::SparseRealMatrix) {
    let lat = Lattice::chain(l, true).unwrap();
    let p = XxzParams::uniform(1.0, 1.0, 0.8, 0.02, l);
    let h = build_hamiltonian(&lat, &p).unwrap();
    let s = full_spectrum(&h, &lat, &p, SpectrumOptions::default()).unwrap();
    (lat, p, s, h)
}

#[test]
fn ground_energy_is_the_rayleigh_minimum() {
    let (_, _, s, h) = chain(6);
    let g = ground_target(&s);
    let e0 = s.energies()[s.ground_index()];
    assert!((energy(&g.state, &h).unwrap() - e0).abs() < 1e-11);
    // No basis state or random state can go below ε₀.
    for seed in 0..5 {
        let spec = AnsatzSpec::new(Variant::Vec, Lattice::chain(6, true).unwrap()).unwrap();
        let psi = forward(&spec, &init_params(&spec, seed).unwrap()).unwrap();
        assert!(energy(&psi, &h).unwrap() >= e0 - 1e-12);
    }
}

#[test]
fn ites_round_trip_recovers_beta() {
    let (_, _, s, _) = chain(8);
    for beta in [0.2, 0.7] {
        let t = build_ites(&s, beta, Some(4)).unwrap();
        let d = decompose(&t.state, &s, None).unwrap();
        assert!((d.total_weight() - 1.0).abs() < 1e-12);
        let fit = fit_efftemp(&d, &FitOptions::default()).unwrap();
        assert!((fit.beta_tilde - beta).abs() < 1e-8, "{beta}: {}", fit.beta_tilde);
    }
}

#[test]
fn random_phases_leave_weights_alone() {
    let (_, _, s, _) = chain(6);
    let plain = decompose(&build_ites(&s, 0.5, None).unwrap().state, &s, None).unwrap();
    let phased = decompose(&build_ites(&s, 0.5, Some(9)).unwrap().state, &s, None).unwrap();
    for (a, b) in plain.entries.iter().zip(&phased.entries) {
        assert!((a.weight - b.weight).abs() < 1e-13);
    }
}

#[test]
fn vec_learns_an_ites_target_and_checkpoints_reproduce_it() {
    let (lat, _, s, h) = chain(4);
    let target = build_ites(&s, 0.3, None).unwrap();
    let spec = AnsatzSpec::new(Variant::Vec, lat).unwrap();
    let monitor = Monitor::new(&h, &target.state, Some(&s), FitOptions::default(), None).unwrap();
    let adam = AdamConfig::new(Schedule::constant(1e-2));
    let mut cfg = TrainConfig::new(OptimizerConfig::Adam(adam), 3000, 5);
    cfg.record_every = 500;
    let out = train(&spec, &Objective::Infidelity(&target.state), &monitor, &cfg).unwrap();
    let last = out.records.last().unwrap();
    assert!(last.infidelity < 1e-6, "{}", last.infidelity);
    let fit = last.fit.unwrap();
    assert!((fit.beta_tilde - 0.3).abs() < 0.05, "{}", fit.beta_tilde);

    let ckpt = Checkpoint::params(&spec, &out.theta, 5, out.final_step).unwrap();
    let back = decode_checkpoint(&encode_checkpoint(&ckpt)).unwrap();
    let psi = forward(&spec, &back.data).unwrap();
    assert_eq!(psi, forward(&spec, &out.theta).unwrap());
    assert!((infidelity_vs(&psi, &target.state).unwrap() - last.infidelity).abs() < 1e-12);
}

#[test]
fn cached_spectrum_reproduces_eigenpairs() {
    let (lat, p, s, h) = chain(6);
    let header = SpectrumHeader::new(&lat, &p, s.is_sectored(), &h);
    let (h2, s2) = decode_spectrum(&encode_spectrum(&header, &s)).unwrap();
    assert_eq!(h2, header);
    assert_eq!(s2.energies(), s.energies());
    for i in [0, 7, 63] {
        assert_eq!(s2.eigenvector(i), s.eigenvector(i));
    }
}

#[test]
fn training_is_deterministic() {
    let (lat, _, s, h) = chain(4);
    let g = ground_target(&s);
    let spec = AnsatzSpec::new(Variant::Mps { chi: 2 }, lat).unwrap();
    let monitor = Monitor::new(&h, &g.state, Some(&s), FitOptions::default(), None).unwrap();
    let cfg = TrainConfig::new(OptimizerConfig::Adam(table_adam(&spec.variant)), 200, 3);
    let a = train(&spec, &Objective::Energy(&h), &monitor, &cfg).unwrap();
    let b = train(&spec, &Objective::Energy(&h), &monitor, &cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.theta, b.theta);
}

fn product_state(angles: &[f64]) -> Vec<C64> {
    let mut psi = vec![C64::new(1.0, 0.0)];
    for &a in angles {
        let (up, down) = (C64::new(a.cos(), 0.0), C64::new(0.0, a.sin()));
        // New site is the next-higher bit.
        let mut next = Vec::with_capacity(psi.len() * 2);
        next.extend(psi.iter().map(|z| z * up));
        next.extend(psi.iter().map(|z| z * down));
        psi = next;
    }
    psi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn product_states_carry_no_entanglement(angles in prop::collection::vec(-3.0f64..3.0, 2..7), cut in 1usize..6) {
        let cut = cut.min(angles.len() - 1);
        let psi = product_state(&angles);
        prop_assert!((norm_sqr(&psi) - 1.0).abs() < 1e-12);
        prop_assert!(entanglement_entropy(&psi, cut).unwrap().abs() < 1e-10);
    }

    #[test]
    fn decomposition_weights_sum_to_one(seed in 0u64..1000) {
        let (lat, _, s, _) = chain(5);
        let spec = AnsatzSpec::new(Variant::Vec, lat).unwrap();
        let psi = forward(&spec, &init_params(&spec, seed).unwrap()).unwrap();
        let d = decompose(&psi, &s, None).unwrap();
        prop_assert!((d.total_weight() - 1.0).abs() < 1e-12);
        // Synthesizing from the overlaps gives the normalized state back.
        let n = norm_sqr(&psi).sqrt();
        let rebuilt = s.synthesize(&s.overlaps(&psi).unwrap()).unwrap();
        let fid = inner(&rebuilt, &psi).norm() / (n * norm_sqr(&rebuilt).sqrt());
        prop_assert!((fid - 1.0).abs() < 1e-12);
    }
}
