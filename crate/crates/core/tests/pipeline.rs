use std::path::PathBuf;

use qbn_core::bayesnet::{from_json, stock_network, to_json, two_node_network, NodeId};
use qbn_core::circuit::qasm::{from_qasm, to_qasm};
use qbn_core::cqbn::{compile, node_distribution, verify_distribution};
use qbn_core::device::{builtin_catalog, catalog_device};
use qbn_core::harness::marginals_from_counts;
use qbn_core::sim::{evolve, run_noisy, sample};
use qbn_core::transpiler::{transpile, OptimizationLevel};

fn network_file(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../networks")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn bundled_networks_match_builtins() {
    let stock = from_json(&network_file("stock.json")).unwrap();
    assert_eq!(to_json(&stock), to_json(&stock_network()));
    let two = from_json(&network_file("two_node.json")).unwrap();
    assert_eq!(to_json(&two), to_json(&two_node_network()));
}

#[test]
fn stock_marginals_from_amplitudes() {
    let (c, plan) = compile(&stock_network()).unwrap();
    let d = node_distribution(&c, &plan).unwrap();
    let expect = [0.750, 0.600, 0.425, 0.499];
    for (node, want) in expect.iter().enumerate() {
        let p0: f64 = d
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> node) & 1 == 0)
            .map(|(_, p)| p)
            .sum();
        assert!((p0 - want).abs() < 1e-9, "node {node}: {p0}");
    }
}

#[test]
fn qasm_round_trip_keeps_the_distribution() {
    let bn = stock_network();
    let (c, plan) = compile(&bn).unwrap();
    // Compiled circuits contain no CCRY, so they export directly.
    let back = from_qasm(&to_qasm(&c).unwrap()).unwrap();
    assert_eq!(back.roles(), c.roles());
    assert!(verify_distribution(&bn, &back, &plan).unwrap() <= 1e-9);
}

#[test]
fn noiseless_stock_run_within_four_sigma() {
    let bn = stock_network();
    let (c, plan) = compile(&bn).unwrap();
    let exact = bn.exact_marginals().unwrap();
    let shots = 8192;
    for d in builtin_catalog() {
        let clean = d.noiseless();
        let r = transpile(&c, &clean, OptimizationLevel::L3, 0).unwrap();
        let counts = run_noisy(&r.circuit, &clean, shots, 17).unwrap();
        let m = marginals_from_counts(&counts, &plan.relocated(&r.final_layout)).unwrap();
        for (node, (&got, &want)) in m.iter().zip(&exact).enumerate() {
            let sigma = (want * (1.0 - want) / shots as f64).sqrt();
            assert!(
                (got - want).abs() <= 4.0 * sigma,
                "{} node {node}: {got} vs {want}",
                d.name()
            );
        }
    }
}

#[test]
fn logical_and_transpiled_runs_agree_without_noise() {
    let bn = two_node_network();
    let (c, plan) = compile(&bn).unwrap();
    let measured: Vec<usize> = c.measured().iter().copied().collect();
    let logical = sample(&evolve(&c).unwrap(), &measured, 20000, 5).unwrap();
    let logical_m = marginals_from_counts(&logical, &plan).unwrap();
    let d = catalog_device("melbourne").unwrap().noiseless();
    let r = transpile(&c, &d, OptimizationLevel::L2, 0).unwrap();
    let physical = run_noisy(&r.circuit, &d, 20000, 5).unwrap();
    let physical_m = marginals_from_counts(&physical, &plan.relocated(&r.final_layout)).unwrap();
    for node in [NodeId(0), NodeId(1)] {
        assert!((logical_m[node.0] - physical_m[node.0]).abs() < 0.03);
    }
}
