mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use qbn_core::bayesnet::stock_network;
use qbn_core::circuit::{circuit_unitary, CircuitBuilder, GateKind};
use qbn_core::cqbn::compile;
use qbn_core::device::catalog_device;
use qbn_core::harness::{run_experiment, ExperimentConfig};
use qbn_core::sim::{evolve, run_noisy, total_variation};
use qbn_core::transpiler::{transpile, OptimizationLevel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ry_pi_over_three() {
    let mut b = CircuitBuilder::new(1);
    b.push(GateKind::Ry(PI / 3.0), &[0]).unwrap();
    let p = evolve(&b.build().unwrap()).unwrap().probabilities();
    assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
}

#[test]
fn empty_circuit_stays_in_ground_state() {
    let sv = evolve(&CircuitBuilder::new(3).build().unwrap()).unwrap();
    assert_eq!(sv.amplitudes()[0], Complex64::new(1.0, 0.0));
    assert!(sv.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
}

#[test]
fn evolve_matches_unitary_first_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..25 {
        let c = common::random_circuit(&mut rng, 9, 40);
        let sv = evolve(&c).unwrap();
        let u = circuit_unitary(&c).unwrap();
        for (i, a) in sv.amplitudes().iter().enumerate() {
            assert!((a - u[(i, 0)]).norm() < 1e-9);
        }
        assert!((sv.norm_sqr() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn doubling_noise_does_not_reduce_distance() {
    let (c, _) = compile(&stock_network()).unwrap();
    let d = catalog_device("athens").unwrap();
    let r = transpile(&c, &d, OptimizationLevel::L1, 0).unwrap();
    let clean = d.noiseless();
    let doubled = d.scaled(2.0);
    let mut wins = 0;
    for seed in 0..10u64 {
        let reference = run_noisy(&r.circuit, &clean, 4096, 1000 + seed).unwrap();
        let base = total_variation(&run_noisy(&r.circuit, &d, 4096, seed).unwrap(), &reference);
        let more = total_variation(
            &run_noisy(&r.circuit, &doubled, 4096, seed).unwrap(),
            &reference,
        );
        wins += (more >= base) as usize;
    }
    assert!(wins > 5, "doubled noise won only {wins}/10");
}

#[test]
fn noise_raises_rmspe() {
    let d = catalog_device("yorktown").unwrap();
    let mut cfg = ExperimentConfig::new("stock", stock_network(), vec![d.clone(), d.noiseless()]);
    cfg.levels = vec![OptimizationLevel::L0];
    cfg.base_seed = 2;
    let r = run_experiment(&cfg).unwrap();
    assert!(r.cells[0].rmspe_percent > r.cells[1].rmspe_percent);
}

#[test]
fn noiseless_rmspe_shrinks_with_shots() {
    let sim = catalog_device("yorktown").unwrap().noiseless();
    let median_rmspe = |shots: u64| {
        let mut v: Vec<f64> = (0..10)
            .map(|seed| {
                let mut cfg = ExperimentConfig::new("stock", stock_network(), vec![sim.clone()]);
                cfg.levels = vec![OptimizationLevel::L0];
                cfg.runs = 1;
                cfg.shots = shots;
                cfg.base_seed = seed;
                run_experiment(&cfg).unwrap().cells[0].rmspe_percent
            })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (v[4] + v[5]) / 2.0
    };
    assert!(median_rmspe(1 << 17) < median_rmspe(1 << 7));
}
