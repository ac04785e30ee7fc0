#![allow(dead_code)]

use std::f64::consts::PI;

use qbn_core::bayesnet::{BayesianNetwork, Cpt, NodeId};
use qbn_core::circuit::{CircuitBuilder, GateKind, QuantumCircuit};
use rand::seq::index::sample;
use rand::Rng;

fn probability(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    }
}

/// Random DAG over `1..=max_nodes` binary nodes, each with at most
/// `max_parents` parents chosen among earlier nodes.
pub fn random_network(rng: &mut impl Rng, max_nodes: usize, max_parents: usize) -> BayesianNetwork {
    let n = rng.random_range(1..=max_nodes);
    let nodes = (0..n)
        .map(|i| {
            let k = rng.random_range(0..=max_parents.min(i));
            let mut parents: Vec<usize> = sample(rng, i.max(1), k).into_vec();
            parents.sort_unstable();
            let rows = (0..1usize << k)
                .map(|_| {
                    let p0 = probability(rng);
                    (p0, 1.0 - p0)
                })
                .collect();
            (
                format!("N{i}"),
                Cpt::new(parents.into_iter().map(NodeId).collect(), rows),
            )
        })
        .collect();
    BayesianNetwork::new(nodes)
}

/// P(node = 0) for every node by direct enumeration of the chain-rule product.
pub fn brute_force_marginals(bn: &BayesianNetwork) -> Vec<f64> {
    let n = bn.len();
    let mut zero = vec![0.0; n];
    for bits in 0..1usize << n {
        let value = |id: NodeId| (bits >> id.0) & 1;
        let mut p = 1.0;
        for node in bn.nodes() {
            let row = node
                .cpt
                .parents()
                .iter()
                .fold(0usize, |acc, &parent| (acc << 1) | value(parent));
            let (p0, p1) = node.cpt.rows()[row];
            p *= if value(node.id) == 0 { p0 } else { p1 };
        }
        for (i, z) in zero.iter_mut().enumerate() {
            if (bits >> i) & 1 == 0 {
                *z += p;
            }
        }
    }
    zero
}

fn angle(rng: &mut impl Rng) -> f64 {
    rng.random_range(-PI..PI)
}

pub fn random_one_qubit_kind(rng: &mut impl Rng) -> GateKind {
    match rng.random_range(0..9) {
        0 => GateKind::X,
        1 => GateKind::H,
        2 => GateKind::S,
        3 => GateKind::T,
        4 => GateKind::Tdg,
        5 => GateKind::U1(angle(rng)),
        6 => GateKind::U2(angle(rng), angle(rng)),
        7 => GateKind::U3(angle(rng).abs(), angle(rng), angle(rng)),
        _ => GateKind::Ry(angle(rng)),
    }
}

/// Random logical circuit: width `1..=max_width`, `1..=max_gates` gates drawn
/// from every gate kind that fits.
pub fn random_circuit(rng: &mut impl Rng, max_width: usize, max_gates: usize) -> QuantumCircuit {
    let w = rng.random_range(1..=max_width);
    let len = rng.random_range(1..=max_gates);
    let mut b = CircuitBuilder::new(w);
    for _ in 0..len {
        let arity = match w {
            1 => 1,
            2 => rng.random_range(1..=2),
            _ => rng.random_range(1..=3),
        };
        let qubits = sample(rng, w, arity).into_vec();
        let kind = match arity {
            1 => random_one_qubit_kind(rng),
            2 => match rng.random_range(0..3) {
                0 => GateKind::Cnot,
                1 => GateKind::Cry(angle(rng)),
                _ => GateKind::Swap,
            },
            _ => {
                if rng.random_bool(0.5) {
                    GateKind::Ccnot
                } else {
                    GateKind::Ccry(angle(rng))
                }
            }
        };
        b.push(kind, &qubits).expect("valid random gate");
    }
    b.build().expect("valid random circuit")
}
