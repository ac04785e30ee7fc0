//! Compositional mapping of a Bayesian network onto a circuit.
//!
//! Each node gets one qubit, assigned in depth-layered topological order.
//! Roots are prepared with `RY(θ)`; every CPT row of a child becomes a
//! rotation controlled on its parent values:
//!
//! * one parent `A`: `X(A) CRY(θ₀)(A→B) X(A)` then `CRY(θ₁)(A→B)`;
//! * two parents: for each of the rows 00, 01, 10, 11 the zero-valued parents
//!   are flipped, `CCNOT(parents→anc)` loads the condition into the ancilla,
//!   `CRY(θ)(anc→target)` rotates, and a second `CCNOT` plus the undo flips
//!   restore everything.
//!
//! One ancilla, placed after all node qubits, is shared by every two-parent
//! node. Adjacent redundant X pairs are left in; removing them is the
//! transpiler's job.

use std::f64::consts::PI;

use thiserror::Error;

use crate::bayesnet::{BayesianNetwork, BnError, NodeId, Violation};
use crate::circuit::{CircuitBuilder, CircuitError, GateKind, QuantumCircuit, QubitRole};
use crate::sim::{evolve, SimError};

/// Widest circuit [`verify_distribution`] will simulate.
pub const VERIFY_WIDTH_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("invalid network: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("node {node} has {parents} parents; at most 2 are supported")]
    TooManyParents { node: NodeId, parents: usize },
    #[error("circuit width {width} exceeds verification cap {cap}")]
    TooWide { width: usize, cap: usize },
    #[error(transparent)]
    Bn(#[from] BnError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Where each node and ancilla lives, and the order nodes were emitted in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompilationPlan {
    node_qubit: Vec<usize>,
    ancilla_qubits: Vec<usize>,
    emission_order: Vec<NodeId>,
}

impl CompilationPlan {
    pub fn node_qubit(&self, node: NodeId) -> usize {
        self.node_qubit[node.0]
    }

    pub fn node_qubits(&self) -> &[usize] {
        &self.node_qubit
    }

    pub fn ancilla_qubits(&self) -> &[usize] {
        &self.ancilla_qubits
    }

    pub fn emission_order(&self) -> &[NodeId] {
        &self.emission_order
    }

    pub fn n_nodes(&self) -> usize {
        self.node_qubit.len()
    }

    /// The same plan after moving logical qubit `q` to `placement[q]`.
    pub fn relocated(&self, placement: &[usize]) -> Self {
        Self {
            node_qubit: self.node_qubit.iter().map(|&q| placement[q]).collect(),
            ancilla_qubits: self.ancilla_qubits.iter().map(|&q| placement[q]).collect(),
            emission_order: self.emission_order.clone(),
        }
    }
}

/// Y-rotation angle that prepares `sqrt(p0)|0> + sqrt(p1)|1>` from `|0>`.
///
/// Returns `π` when `p0 = 0`.
pub fn rotation_angle(p0: f64, p1: f64) -> f64 {
    if p0 <= 0.0 {
        PI
    } else {
        2.0 * (p1.max(0.0) / p0).sqrt().atan()
    }
}

pub fn compile(bn: &BayesianNetwork) -> Result<(QuantumCircuit, CompilationPlan), CompileError> {
    bn.validate().map_err(CompileError::Invalid)?;
    for node in bn.nodes() {
        let k = node.cpt.parents().len();
        if k > 2 {
            return Err(CompileError::TooManyParents {
                node: node.id,
                parents: k,
            });
        }
    }
    let order = bn.topological_order();
    let s = bn.len();
    let mut node_qubit = vec![0; s];
    for (q, id) in order.iter().enumerate() {
        node_qubit[id.0] = q;
    }
    let needs_ancilla = bn.nodes().iter().any(|n| n.cpt.parents().len() == 2);
    let ancilla_qubits: Vec<usize> = if needs_ancilla { vec![s] } else { Vec::new() };
    let width = s + ancilla_qubits.len();

    let mut b = CircuitBuilder::new(width);
    for &id in &order {
        let node = bn.node(id);
        let target = node_qubit[id.0];
        let parents: Vec<usize> = node.cpt.parents().iter().map(|p| node_qubit[p.0]).collect();
        let angles: Vec<f64> = node
            .cpt
            .rows()
            .iter()
            .map(|&(p0, p1)| rotation_angle(p0, p1))
            .collect();
        match parents.as_slice() {
            [] => {
                b.push(GateKind::Ry(angles[0]), &[target])?;
            }
            &[a] => {
                b.push(GateKind::X, &[a])?;
                b.push(GateKind::Cry(angles[0]), &[a, target])?;
                b.push(GateKind::X, &[a])?;
                b.push(GateKind::Cry(angles[1]), &[a, target])?;
            }
            &[a, c] => {
                let anc = ancilla_qubits[0];
                for (row, &theta) in angles.iter().enumerate() {
                    let flips: Vec<usize> = [(a, row >> 1), (c, row & 1)]
                        .into_iter()
                        .filter(|&(_, v)| v == 0)
                        .map(|(q, _)| q)
                        .collect();
                    for &q in &flips {
                        b.push(GateKind::X, &[q])?;
                    }
                    b.push(GateKind::Ccnot, &[a, c, anc])?;
                    b.push(GateKind::Cry(theta), &[anc, target])?;
                    b.push(GateKind::Ccnot, &[a, c, anc])?;
                    for &q in &flips {
                        b.push(GateKind::X, &[q])?;
                    }
                }
            }
            _ => unreachable!("parent count checked above"),
        }
        b.role(target, QubitRole::Node(id)).measure(target);
    }
    let plan = CompilationPlan {
        node_qubit,
        ancilla_qubits,
        emission_order: order,
    };
    Ok((b.build()?, plan))
}

/// Node-qubit distribution of the noiseless final state, indexed like
/// [`BayesianNetwork::joint_distribution`] (bit `i` is node `i`).
pub fn node_distribution(
    circuit: &QuantumCircuit,
    plan: &CompilationPlan,
) -> Result<Vec<f64>, CompileError> {
    if circuit.width() > VERIFY_WIDTH_CAP {
        return Err(CompileError::TooWide {
            width: circuit.width(),
            cap: VERIFY_WIDTH_CAP,
        });
    }
    let probs = evolve(circuit)?.probabilities();
    let mut dist = vec![0.0; 1 << plan.n_nodes()];
    for (i, p) in probs.iter().enumerate() {
        let bits = plan
            .node_qubits()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (node, &q)| acc | (((i >> q) & 1) << node));
        dist[bits] += p;
    }
    Ok(dist)
}

/// Largest absolute gap between the circuit's node distribution and the
/// network's factorised joint.
pub fn verify_distribution(
    bn: &BayesianNetwork,
    circuit: &QuantumCircuit,
    plan: &CompilationPlan,
) -> Result<f64, CompileError> {
    let dist = node_distribution(circuit, plan)?;
    let joint = bn.joint_distribution(VERIFY_WIDTH_CAP)?;
    Ok(dist
        .iter()
        .zip(&joint)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Probability that every ancilla ends in `|0>` in the noiseless state.
pub fn ancilla_ground_probability(
    circuit: &QuantumCircuit,
    plan: &CompilationPlan,
) -> Result<f64, CompileError> {
    if circuit.width() > VERIFY_WIDTH_CAP {
        return Err(CompileError::TooWide {
            width: circuit.width(),
            cap: VERIFY_WIDTH_CAP,
        });
    }
    let mask: usize = plan.ancilla_qubits().iter().map(|q| 1usize << q).sum();
    Ok(evolve(circuit)?
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask == 0)
        .map(|(_, p)| p)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::{stock_network, two_node_network, Cpt};

    #[test]
    fn rotation_angle_examples() {
        assert!((rotation_angle(0.5, 0.5) - PI / 2.0).abs() < 1e-15);
        assert_eq!(rotation_angle(1.0, 0.0), 0.0);
        assert_eq!(rotation_angle(0.0, 1.0), PI);
        assert!((rotation_angle(0.75, 0.25) - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_node_circuit_shape() {
        let (c, plan) = compile(&two_node_network()).unwrap();
        assert_eq!(c.width(), 2);
        assert_eq!(c.count("ry"), 1);
        assert_eq!(c.count("cry"), 2);
        assert_eq!(c.count("x"), 2);
        assert_eq!(c.ops().len(), 5);
        // RY(θA) on A, then X · CRY(θB0) · X, then CRY(θB1).
        let names: Vec<_> = c.ops().iter().map(|o| o.kind.name()).collect();
        assert_eq!(names, ["ry", "x", "cry", "x", "cry"]);
        assert!(plan.ancilla_qubits().is_empty());
        assert_eq!(c.measured().len(), 2);
    }

    #[test]
    fn stock_circuit_has_five_qubits() {
        let (c, plan) = compile(&stock_network()).unwrap();
        assert_eq!(c.width(), 5);
        assert_eq!(plan.ancilla_qubits(), &[4]);
        assert_eq!(c.roles()[4], QubitRole::Ancilla);
        assert_eq!(c.measured().len(), 4);
        // Roots: 1 RY each. SM: 2 CRY + 2 X. SP: 8 CCNOT, 4 CRY, 8 X.
        assert_eq!(c.count("ry"), 2);
        assert_eq!(c.count("cry"), 6);
        assert_eq!(c.count("x"), 10);
        assert_eq!(c.count("ccx"), 8);
        assert_eq!(c.ops().len(), 26);
    }

    #[test]
    fn roots_are_emitted_first() {
        let (c, plan) = compile(&stock_network()).unwrap();
        assert_eq!(
            plan.emission_order(),
            &[NodeId(0), NodeId(1), NodeId(2), NodeId(3)]
        );
        assert_eq!(c.ops()[0].kind.name(), "ry");
        assert_eq!(c.ops()[1].kind.name(), "ry");
    }

    #[test]
    fn certain_root_is_ground_state() {
        let bn = BayesianNetwork::new(vec![("A".into(), Cpt::root(1.0))]);
        let (c, plan) = compile(&bn).unwrap();
        assert_eq!(c.ops().len(), 1);
        assert_eq!(c.ops()[0].kind, GateKind::Ry(0.0));
        assert_eq!(node_distribution(&c, &plan).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn stock_distribution_matches_joint() {
        let bn = stock_network();
        let (c, plan) = compile(&bn).unwrap();
        assert!(verify_distribution(&bn, &c, &plan).unwrap() <= 1e-9);
        assert!((ancilla_ground_probability(&c, &plan).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_node_marginal_from_amplitudes() {
        let bn = two_node_network();
        let (c, plan) = compile(&bn).unwrap();
        let d = node_distribution(&c, &plan).unwrap();
        // Node B is bit 1: P(B=0) sums indices 0 and 1.
        assert!((d[0] + d[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn deterministic_network_is_exact() {
        let bn = BayesianNetwork::new(vec![
            ("A".into(), Cpt::root(0.0)),
            ("B".into(), Cpt::root(1.0)),
            (
                "C".into(),
                Cpt::new(vec![NodeId(0)], vec![(1.0, 0.0), (0.0, 1.0)]),
            ),
            (
                "D".into(),
                Cpt::new(
                    vec![NodeId(1), NodeId(2)],
                    vec![(0.0, 1.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
                ),
            ),
        ]);
        let (c, plan) = compile(&bn).unwrap();
        assert!(verify_distribution(&bn, &c, &plan).unwrap() <= 1e-12);
    }

    #[test]
    fn rejects_three_parents_and_invalid_networks() {
        let bn = BayesianNetwork::new(vec![
            ("A".into(), Cpt::root(0.5)),
            ("B".into(), Cpt::root(0.5)),
            ("C".into(), Cpt::root(0.5)),
            (
                "D".into(),
                Cpt::new(vec![NodeId(0), NodeId(1), NodeId(2)], vec![(0.5, 0.5); 8]),
            ),
        ]);
        assert!(matches!(
            compile(&bn),
            Err(CompileError::TooManyParents { parents: 3, .. })
        ));
        let bad = BayesianNetwork::new(vec![("A".into(), Cpt::new(vec![], vec![(0.5, 0.4)]))]);
        assert!(matches!(compile(&bad), Err(CompileError::Invalid(_))));
    }

    #[test]
    fn relocated_plan() {
        let (_, plan) = compile(&stock_network()).unwrap();
        let moved = plan.relocated(&[4, 3, 2, 0, 1]);
        assert_eq!(moved.node_qubits(), &[4, 3, 2, 0]);
        assert_eq!(moved.ancilla_qubits(), &[1]);
    }
}
