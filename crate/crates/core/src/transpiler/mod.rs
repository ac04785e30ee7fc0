//! Lowering logical circuits onto a device at optimisation levels 0 to 3.
//!
//! | level | layout         | after routing                                   |
//! |-------|----------------|-------------------------------------------------|
//! | 0     | trivial        | nothing                                         |
//! | 1     | trivial        | merge neighbours on a wire, cancel inverses     |
//! | 2     | noise-adaptive | level 1, then commutation-aware cancellation    |
//! | 3     | noise-adaptive | level 2, then single-qubit resynthesis          |
//!
//! Every level translates to {U1, U2, U3, CNOT} first and routes with
//! shortest-path SWAP insertion, so all outputs are device-legal.

mod decompose;
mod layout;
mod optimize;
mod routing;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{CircuitError, GateKind, GateOp, QuantumCircuit, QubitRole};
use crate::device::DeviceModel;
use crate::sim::{SimError, Statevector, MAX_WIDTH};

pub use decompose::{
    decompose_ccnot, decompose_ccry, decompose_cry, decompose_swap, resynthesize_1q, translate,
    translate_op,
};
pub use layout::{noise_adaptive_layout, Traffic};
pub use optimize::{
    commutative_cancellation, commutes, merge_adjacent, resynthesize_runs, run_to_fixpoint, Pass,
    PassManager,
};
pub use routing::{route, Layout, Routed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum OptimizationLevel {
    L0,
    L1,
    L2,
    L3,
}

impl OptimizationLevel {
    pub const ALL: [OptimizationLevel; 4] = [Self::L0, Self::L1, Self::L2, Self::L3];

    pub fn from_u8(level: u8) -> Result<Self, TranspileError> {
        Self::ALL
            .get(level as usize)
            .copied()
            .ok_or(TranspileError::Level(level))
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    fn noise_adaptive(self) -> bool {
        self >= Self::L2
    }
}

impl fmt::Display for OptimizationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TranspileError {
    #[error("optimization level {0} does not exist (expected 0-3)")]
    Level(u8),
    #[error("circuit of width {width} does not fit on {device} ({qubits} qubits)")]
    TooWide {
        width: usize,
        device: String,
        qubits: usize,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranspileMetrics {
    pub gates_before: BTreeMap<String, usize>,
    pub gates_after: BTreeMap<String, usize>,
    pub swaps_inserted: usize,
    pub estimated_success: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranspileResult {
    /// Device-width circuit over {U1, U2, U3, CNOT}. Roles and measurements
    /// follow each logical qubit to its final physical position.
    pub circuit: QuantumCircuit,
    pub level: OptimizationLevel,
    /// Logical → physical before the first gate.
    pub initial_layout: Vec<usize>,
    /// Logical → physical after routing.
    pub final_layout: Vec<usize>,
    pub metrics: TranspileMetrics,
    layout: Layout,
    final_full: Layout,
}

impl TranspileResult {
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn final_permutation(&self) -> &Layout {
        &self.final_full
    }
}

fn counts_map(c: &QuantumCircuit) -> BTreeMap<String, usize> {
    c.gate_counts()
        .into_iter()
        .map(|(k, n)| (k.to_string(), n))
        .collect()
}

/// `Π (1 − error)` over every gate, charging 1-qubit gates `u2_error` and
/// CNOTs their edge's `cnot_error`.
pub fn estimated_success(ops: &[GateOp], d: &DeviceModel) -> f64 {
    ops.iter()
        .map(|op| match *op.qubits.as_slice() {
            [q] => 1.0 - d.u2_error(q),
            [a, b] => 1.0 - d.cnot_error(a, b).unwrap_or(1.0),
            _ => 0.0,
        })
        .product()
}

/// Initial layout a level would choose for `c` on `d`.
pub fn choose_layout(c: &QuantumCircuit, d: &DeviceModel, level: OptimizationLevel) -> Layout {
    if level.noise_adaptive() {
        noise_adaptive_layout(&translate(c.ops()), c.width(), d)
    } else {
        Layout::trivial(d.n_qubits())
    }
}

/// Transpiles `c` for `d` at `level`.
///
/// Every pass is deterministic, so `_seed` does not change the output; it is
/// accepted so callers can record it alongside results.
pub fn transpile(
    c: &QuantumCircuit,
    d: &DeviceModel,
    level: OptimizationLevel,
    _seed: u64,
) -> Result<TranspileResult, TranspileError> {
    if c.width() > d.n_qubits() {
        return Err(TranspileError::TooWide {
            width: c.width(),
            device: d.name().to_string(),
            qubits: d.n_qubits(),
        });
    }
    let layout = choose_layout(c, d, level);
    transpile_with_layout(c, d, level, &layout)
}

/// [`transpile`] with a caller-chosen initial layout.
pub fn transpile_with_layout(
    c: &QuantumCircuit,
    d: &DeviceModel,
    level: OptimizationLevel,
    layout: &Layout,
) -> Result<TranspileResult, TranspileError> {
    let translated = translate(c.ops());
    let routed = route(&translated, d, layout);
    let ops = PassManager::new(level).run(routed.ops);

    let n = d.n_qubits();
    let fin = &routed.final_layout;
    let roles: Vec<QubitRole> = (0..n)
        .map(|p| {
            let v = fin.virtual_at(p);
            if v < c.width() {
                c.roles()[v]
            } else {
                QubitRole::Ancilla
            }
        })
        .collect();
    let measured: BTreeSet<usize> = c.measured().iter().map(|&v| fin.physical(v)).collect();
    let metrics = TranspileMetrics {
        gates_before: counts_map(c),
        gates_after: BTreeMap::new(),
        swaps_inserted: routed.swaps,
        estimated_success: estimated_success(&ops, d),
    };
    let circuit = QuantumCircuit::from_parts(n, ops, roles, measured)?;
    let metrics = TranspileMetrics {
        gates_after: counts_map(&circuit),
        ..metrics
    };
    Ok(TranspileResult {
        circuit,
        level,
        initial_layout: layout.placement(c.width()),
        final_layout: fin.placement(c.width()),
        metrics,
        layout: layout.clone(),
        final_full: fin.clone(),
    })
}

/// Checks that `result` implements `input` up to global phase.
///
/// Every computational basis state of the logical register is placed on the
/// device through the initial layout (idle qubits in `|0>`), pushed through
/// the transpiled circuit, read back through the final layout, and compared
/// with the input circuit's column. One global phase must fit all columns.
/// Only qubits the transpiled circuit touches are simulated.
pub fn equivalent_up_to_phase(
    input: &QuantumCircuit,
    result: &TranspileResult,
    tol: f64,
) -> Result<bool, TranspileError> {
    let w = input.width();
    let out = &result.circuit;
    let mut active: BTreeSet<usize> = out.active_qubits();
    active.extend(result.initial_layout.iter().copied());
    active.extend(result.final_layout.iter().copied());
    let active: Vec<usize> = active.into_iter().collect();
    let m = active.len();
    if m > MAX_WIDTH || w > MAX_WIDTH {
        return Err(SimError::TooWide {
            width: m.max(w),
            cap: MAX_WIDTH,
        }
        .into());
    }
    let compact = |p: usize| active.binary_search(&p).expect("active");
    let compact_ops: Vec<GateOp> = out
        .ops()
        .iter()
        .map(|op| {
            GateOp::new(
                op.kind,
                &op.qubits.iter().map(|&q| compact(q)).collect::<Vec<_>>(),
            )
        })
        .collect();
    let init: Vec<usize> = result.initial_layout.iter().map(|&p| compact(p)).collect();
    let fin: Vec<usize> = result.final_layout.iter().map(|&p| compact(p)).collect();
    let embed = |x: usize, pos: &[usize]| {
        pos.iter()
            .enumerate()
            .fold(0usize, |acc, (v, &p)| acc | (((x >> v) & 1) << p))
    };

    let mut columns = Vec::with_capacity(1 << w);
    let mut overlap = Complex64::new(0.0, 0.0);
    for x in 0..1usize << w {
        let mut expect = basis_state(w, x);
        for op in input.ops() {
            expect.apply(op);
        }
        let mut got = basis_state(m, embed(x, &init));
        for op in &compact_ops {
            got.apply(op);
        }
        for (y, a) in expect.amplitudes().iter().enumerate() {
            overlap += a.conj() * got.amplitudes()[embed(y, &fin)];
        }
        columns.push((expect, got));
    }
    if overlap.norm() < 1e-12 {
        return Ok(false);
    }
    let phase = overlap / overlap.norm();
    for (expect, got) in &columns {
        let mut target = vec![Complex64::new(0.0, 0.0); 1 << m];
        for (y, a) in expect.amplitudes().iter().enumerate() {
            target[embed(y, &fin)] = a * phase;
        }
        if got
            .amplitudes()
            .iter()
            .zip(&target)
            .any(|(g, t)| (g - t).norm() > tol)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

fn basis_state(width: usize, index: usize) -> Statevector {
    let mut sv = Statevector::zero(width).expect("width checked");
    let amps = sv.amplitudes_mut();
    amps[0] = Complex64::new(0.0, 0.0);
    amps[index] = Complex64::new(1.0, 0.0);
    sv
}

/// True when no gate outside {U1, U2, U3, CNOT} survives and every CNOT sits
/// on a coupling edge.
pub fn is_device_legal(c: &QuantumCircuit, d: &DeviceModel) -> bool {
    c.width() <= d.n_qubits()
        && c.ops().iter().all(|op| {
            op.kind.is_basis()
                && (op.kind != GateKind::Cnot || d.is_edge(op.qubits[0], op.qubits[1]))
        })
}
