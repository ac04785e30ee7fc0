//! Gate-level circuit representation.
//!
//! Qubit 0 is the least significant bit of every basis-state index. When a
//! bitstring is rendered, the highest-index qubit is written leftmost.
//! Multi-qubit gates list their controls first and their target last.

mod matrix;
pub mod qasm;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::bayesnet::NodeId;

pub use matrix::{
    circuit_unitary, circuit_unitary_with_cap, gate_matrix, unitaries_equivalent, Matrix,
    DEFAULT_UNITARY_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    X,
    H,
    S,
    T,
    Tdg,
    U1(f64),
    U2(f64, f64),
    U3(f64, f64, f64),
    Ry(f64),
    Cnot,
    Cry(f64),
    Swap,
    Ccnot,
    /// Logical doubly-controlled RY. Never present in a transpiled circuit.
    Ccry(f64),
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::X
            | GateKind::H
            | GateKind::S
            | GateKind::T
            | GateKind::Tdg
            | GateKind::U1(_)
            | GateKind::U2(..)
            | GateKind::U3(..)
            | GateKind::Ry(_) => 1,
            GateKind::Cnot | GateKind::Cry(_) | GateKind::Swap => 2,
            GateKind::Ccnot | GateKind::Ccry(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::U1(_) => "u1",
            GateKind::U2(..) => "u2",
            GateKind::U3(..) => "u3",
            GateKind::Ry(_) => "ry",
            GateKind::Cnot => "cx",
            GateKind::Cry(_) => "cry",
            GateKind::Swap => "swap",
            GateKind::Ccnot => "ccx",
            GateKind::Ccry(_) => "ccry",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            GateKind::U1(l) => vec![l],
            GateKind::U2(p, l) => vec![p, l],
            GateKind::U3(t, p, l) => vec![t, p, l],
            GateKind::Ry(t) | GateKind::Cry(t) | GateKind::Ccry(t) => vec![t],
            _ => Vec::new(),
        }
    }

    /// Member of the device basis {U1, U2, U3, CNOT}.
    pub fn is_basis(&self) -> bool {
        matches!(
            self,
            GateKind::U1(_) | GateKind::U2(..) | GateKind::U3(..) | GateKind::Cnot
        )
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self.params();
        if params.is_empty() {
            f.write_str(self.name())
        } else {
            let p: Vec<String> = params.iter().map(|x| x.to_string()).collect();
            write!(f, "{}({})", self.name(), p.join(","))
        }
    }
}

/// A gate applied to concrete qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Self {
        Self {
            kind,
            qubits: qubits.to_vec(),
        }
    }

    pub fn one(kind: GateKind, q: usize) -> Self {
        Self {
            kind,
            qubits: vec![q],
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
        }
    }

    pub fn target(&self) -> usize {
        *self.qubits.last().expect("gate has operands")
    }

    pub fn acts_on(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q: Vec<String> = self.qubits.iter().map(|q| format!("q[{q}]")).collect();
        write!(f, "{} {}", self.kind, q.join(","))
    }
}

/// What a qubit holds: a Bayesian-network node or a helper qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitRole {
    Node(NodeId),
    Ancilla,
}

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("{gate} expects {expected} operands, got {found}")]
    Arity {
        gate: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{gate}: operand {qubit} out of range for width {width}")]
    QubitOutOfRange {
        gate: &'static str,
        qubit: usize,
        width: usize,
    },
    #[error("{gate}: repeated operand {qubit}")]
    RepeatedOperand { gate: &'static str, qubit: usize },
    #[error("{gate}: non-finite angle")]
    NonFiniteAngle { gate: &'static str },
    #[error("measured qubit {0} is not a node qubit")]
    MeasuredNonNode(usize),
    #[error("role list has {found} entries for width {width}")]
    RoleCount { width: usize, found: usize },
    #[error("circuit width {width} exceeds cap {cap}")]
    TooWide { width: usize, cap: usize },
    #[error("matrix dimensions differ: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("ccry has no OpenQASM 2.0 form; decompose before export")]
    NotExportable,
    #[error("qasm line {line}: {message}")]
    Qasm { line: usize, message: String },
}

/// An ordered gate list over `width` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCircuit {
    width: usize,
    ops: Vec<GateOp>,
    roles: Vec<QubitRole>,
    measured: BTreeSet<usize>,
}

impl QuantumCircuit {
    /// Assembles a circuit, checking every operand and role invariant.
    pub fn from_parts(
        width: usize,
        ops: Vec<GateOp>,
        roles: Vec<QubitRole>,
        measured: BTreeSet<usize>,
    ) -> Result<Self, CircuitError> {
        if roles.len() != width {
            return Err(CircuitError::RoleCount {
                width,
                found: roles.len(),
            });
        }
        for op in &ops {
            check_op(op, width)?;
        }
        for &q in &measured {
            if q >= width || !matches!(roles[q], QubitRole::Node(_)) {
                return Err(CircuitError::MeasuredNonNode(q));
            }
        }
        Ok(Self {
            width,
            ops,
            roles,
            measured,
        })
    }

    /// Circuit with no gates, all qubits ancilla, nothing measured.
    pub fn empty(width: usize) -> Self {
        Self {
            width,
            ops: Vec::new(),
            roles: vec![QubitRole::Ancilla; width],
            measured: BTreeSet::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn roles(&self) -> &[QubitRole] {
        &self.roles
    }

    pub fn measured(&self) -> &BTreeSet<usize> {
        &self.measured
    }

    pub fn into_ops(self) -> Vec<GateOp> {
        self.ops
    }

    /// Same roles and measurements, different gate list.
    pub fn with_ops(&self, ops: Vec<GateOp>) -> Result<Self, CircuitError> {
        Self::from_parts(self.width, ops, self.roles.clone(), self.measured.clone())
    }

    /// Qubit that carries `node`, if any.
    pub fn node_qubit(&self, node: NodeId) -> Option<usize> {
        self.roles.iter().position(|r| *r == QubitRole::Node(node))
    }

    /// Number of gates of each name, sorted by name.
    pub fn gate_counts(&self) -> Vec<(&'static str, usize)> {
        let mut counts: std::collections::BTreeMap<&'static str, usize> = Default::default();
        for op in &self.ops {
            *counts.entry(op.kind.name()).or_default() += 1;
        }
        counts.into_iter().collect()
    }

    pub fn count(&self, name: &str) -> usize {
        self.ops.iter().filter(|op| op.kind.name() == name).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.ops.iter().filter(|op| op.kind.arity() == 2).count()
    }

    /// Qubits touched by any gate or measured.
    pub fn active_qubits(&self) -> BTreeSet<usize> {
        let mut active: BTreeSet<usize> = self.measured.clone();
        for op in &self.ops {
            active.extend(op.qubits.iter().copied());
        }
        active
    }
}

fn check_op(op: &GateOp, width: usize) -> Result<(), CircuitError> {
    let gate = op.kind.name();
    let expected = op.kind.arity();
    if op.qubits.len() != expected {
        return Err(CircuitError::Arity {
            gate,
            expected,
            found: op.qubits.len(),
        });
    }
    for (i, &q) in op.qubits.iter().enumerate() {
        if q >= width {
            return Err(CircuitError::QubitOutOfRange {
                gate,
                qubit: q,
                width,
            });
        }
        if op.qubits[..i].contains(&q) {
            return Err(CircuitError::RepeatedOperand { gate, qubit: q });
        }
    }
    if op.kind.params().iter().any(|p| !p.is_finite()) {
        return Err(CircuitError::NonFiniteAngle { gate });
    }
    Ok(())
}

/// Incremental construction of a [`QuantumCircuit`].
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    width: usize,
    ops: Vec<GateOp>,
    roles: Vec<QubitRole>,
    measured: BTreeSet<usize>,
}

impl CircuitBuilder {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            ops: Vec::new(),
            roles: vec![QubitRole::Ancilla; width],
            measured: BTreeSet::new(),
        }
    }

    pub fn push(&mut self, kind: GateKind, qubits: &[usize]) -> Result<&mut Self, CircuitError> {
        let op = GateOp::new(kind, qubits);
        check_op(&op, self.width)?;
        self.ops.push(op);
        Ok(self)
    }

    pub fn role(&mut self, qubit: usize, role: QubitRole) -> &mut Self {
        self.roles[qubit] = role;
        self
    }

    pub fn measure(&mut self, qubit: usize) -> &mut Self {
        self.measured.insert(qubit);
        self
    }

    pub fn build(self) -> Result<QuantumCircuit, CircuitError> {
        QuantumCircuit::from_parts(self.width, self.ops, self.roles, self.measured)
    }
}
