//! Peephole passes over basis-level gate lists.

use std::f64::consts::PI;

use crate::circuit::{GateKind, GateOp};

use super::decompose::{is_identity, matrix2, resynthesize_1q, simplify_u3, wrap, ANGLE_EPS};
use super::OptimizationLevel;

/// Iteration bound for running a pass list to a fixpoint.
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    /// Merge same-axis neighbours on a wire (`U1·U1`, `RY·RY`), drop
    /// identities, cancel adjacent inverse pairs including `CX·CX`.
    MergeAdjacent,
    /// Cancel or merge gates across neighbours they commute with.
    CommutativeCancellation,
    /// Replace each maximal single-qubit run by one basis gate.
    Resynthesize1q,
}

impl Pass {
    pub fn run(self, ops: Vec<GateOp>) -> Vec<GateOp> {
        match self {
            Pass::MergeAdjacent => merge_adjacent(ops),
            Pass::CommutativeCancellation => commutative_cancellation(ops),
            Pass::Resynthesize1q => resynthesize_runs(ops),
        }
    }
}

/// Runs `passes` in order, repeatedly, until the gate list stops changing.
pub fn run_to_fixpoint(passes: &[Pass], mut ops: Vec<GateOp>) -> Vec<GateOp> {
    for _ in 0..MAX_ROUNDS {
        let before = ops.clone();
        for p in passes {
            ops = p.run(ops);
        }
        if ops == before {
            break;
        }
    }
    ops
}

/// Optimisation schedule for one level.
///
/// Level `k` runs the stages of level `k - 1` and then one more stage made of
/// every pass introduced up to `k`, so its output is always the previous
/// level's output (for the same layout) post-processed by the new stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassManager {
    level: OptimizationLevel,
}

impl PassManager {
    pub fn new(level: OptimizationLevel) -> Self {
        Self { level }
    }

    /// Passes first enabled at `level`.
    pub fn added_passes(level: OptimizationLevel) -> &'static [Pass] {
        match level {
            OptimizationLevel::L0 => &[],
            OptimizationLevel::L1 => &[Pass::MergeAdjacent],
            OptimizationLevel::L2 => &[Pass::CommutativeCancellation],
            OptimizationLevel::L3 => &[Pass::Resynthesize1q],
        }
    }

    /// Every pass enabled at `level`, in run order.
    pub fn passes(level: OptimizationLevel) -> Vec<Pass> {
        OptimizationLevel::ALL
            .iter()
            .filter(|l| **l <= level)
            .flat_map(|&l| Self::added_passes(l).iter().copied())
            .collect()
    }

    pub fn stages(&self) -> Vec<Vec<Pass>> {
        OptimizationLevel::ALL
            .iter()
            .filter(|&&l| l > OptimizationLevel::L0 && l <= self.level)
            .map(|&l| Self::passes(l))
            .collect()
    }

    pub fn run(&self, ops: Vec<GateOp>) -> Vec<GateOp> {
        self.stages()
            .iter()
            .fold(ops, |ops, stage| run_to_fixpoint(stage, ops))
    }
}

fn is_one_qubit(op: &GateOp) -> bool {
    op.qubits.len() == 1
}

fn is_x(kind: &GateKind) -> bool {
    match *kind {
        GateKind::X => true,
        GateKind::U3(t, p, l) => {
            (t - PI).abs() < ANGLE_EPS
                && wrap(p).abs() < ANGLE_EPS
                && (wrap(l) - PI).abs() < ANGLE_EPS
        }
        _ => false,
    }
}

fn is_diagonal(kind: &GateKind) -> bool {
    matches!(
        kind,
        GateKind::U1(_) | GateKind::S | GateKind::T | GateKind::Tdg
    )
}

fn is_ry_like(kind: &GateKind) -> Option<f64> {
    match *kind {
        GateKind::Ry(t) => Some(t),
        GateKind::U3(t, p, l) if p == 0.0 && l == 0.0 => Some(t),
        _ => None,
    }
}

fn diagonal_angle(kind: &GateKind) -> Option<f64> {
    match *kind {
        GateKind::U1(l) => Some(l),
        _ => None,
    }
}

enum Combined {
    /// Both gates vanish.
    Cancel,
    /// Both gates become this one.
    Into(Option<GateKind>),
    No,
}

/// Combines two adjacent single-qubit gates on the same wire.
fn combine_1q(first: &GateKind, second: &GateKind) -> Combined {
    if let (Some(a), Some(b)) = (diagonal_angle(first), diagonal_angle(second)) {
        let l = wrap(a + b);
        return Combined::Into((l.abs() >= ANGLE_EPS).then_some(GateKind::U1(l)));
    }
    if let (Some(a), Some(b)) = (is_ry_like(first), is_ry_like(second)) {
        let t = a + b;
        return Combined::Into((wrap(t).abs() >= ANGLE_EPS).then_some(GateKind::U3(t, 0.0, 0.0)));
    }
    let product = matrix2(second) * matrix2(first);
    let off = product[(0, 1)].norm() + product[(1, 0)].norm();
    if off < ANGLE_EPS && (product[(0, 0)] - product[(1, 1)]).norm() < ANGLE_EPS {
        return Combined::Cancel;
    }
    Combined::No
}

/// Single pass of wire-adjacent merging and inverse-pair cancellation.
pub fn merge_adjacent(ops: Vec<GateOp>) -> Vec<GateOp> {
    let width = ops
        .iter()
        .flat_map(|o| o.qubits.iter())
        .max()
        .map_or(0, |m| m + 1);
    let mut out: Vec<Option<GateOp>> = Vec::with_capacity(ops.len());
    // Indices into `out` of the live gates touching each wire, oldest first.
    let mut wires: Vec<Vec<usize>> = vec![Vec::new(); width];
    let remove = |out: &mut Vec<Option<GateOp>>, wires: &mut Vec<Vec<usize>>, j: usize| {
        for &q in &out[j].as_ref().expect("live gate").qubits {
            let popped = wires[q].pop();
            debug_assert_eq!(popped, Some(j));
        }
        out[j] = None;
    };
    for op in ops {
        if is_one_qubit(&op) {
            if is_identity(&op.kind) {
                continue;
            }
            let q = op.qubits[0];
            if let Some(&j) = wires[q].last() {
                let prev = out[j].as_ref().expect("live gate");
                if is_one_qubit(prev) {
                    match combine_1q(&prev.kind, &op.kind) {
                        Combined::Cancel | Combined::Into(None) => {
                            remove(&mut out, &mut wires, j);
                            continue;
                        }
                        Combined::Into(Some(k)) => {
                            out[j] = Some(GateOp::one(k, q));
                            continue;
                        }
                        Combined::No => {}
                    }
                }
            }
        } else if op.kind == GateKind::Cnot {
            let (c, t) = (op.qubits[0], op.qubits[1]);
            if let (Some(&jc), Some(&jt)) = (wires[c].last(), wires[t].last()) {
                if jc == jt && out[jc].as_ref() == Some(&op) {
                    remove(&mut out, &mut wires, jc);
                    continue;
                }
            }
        }
        let j = out.len();
        for &q in &op.qubits {
            wires[q].push(j);
        }
        out.push(Some(op));
    }
    out.into_iter().flatten().collect()
}

/// The closed commutation rule set. `a` and `b` share at least one qubit.
///
/// * diagonal 1q gates commute with a CNOT control;
/// * X commutes with a CNOT target;
/// * CNOTs sharing only their control commute;
/// * CNOTs sharing only their target commute.
pub fn commutes(a: &GateOp, b: &GateOp) -> bool {
    let cnot = |op: &GateOp| (op.kind == GateKind::Cnot).then(|| (op.qubits[0], op.qubits[1]));
    match (cnot(a), cnot(b)) {
        (Some((c1, t1)), Some((c2, t2))) => (c1 == c2 && t1 != t2) || (t1 == t2 && c1 != c2),
        (Some(cx), None) => one_qubit_commutes_with_cnot(b, cx),
        (None, Some(cx)) => one_qubit_commutes_with_cnot(a, cx),
        (None, None) => false,
    }
}

fn one_qubit_commutes_with_cnot(op: &GateOp, (c, t): (usize, usize)) -> bool {
    if !is_one_qubit(op) {
        return false;
    }
    let q = op.qubits[0];
    (q == c && is_diagonal(&op.kind)) || (q == t && is_x(&op.kind))
}

fn shares_qubit(a: &GateOp, b: &GateOp) -> bool {
    a.qubits.iter().any(|q| b.qubits.contains(q))
}

/// What happens when `g` meets `h` after commuting past everything between.
fn combine_across(g: &GateOp, h: &GateOp) -> Combined {
    if g.kind == GateKind::Cnot {
        return if h == g {
            Combined::Cancel
        } else {
            Combined::No
        };
    }
    if !(is_one_qubit(h) && h.qubits == g.qubits) {
        return Combined::No;
    }
    if let (Some(a), Some(b)) = (diagonal_angle(&g.kind), diagonal_angle(&h.kind)) {
        let l = wrap(a + b);
        return Combined::Into((l.abs() >= ANGLE_EPS).then_some(GateKind::U1(l)));
    }
    if is_x(&g.kind) && is_x(&h.kind) {
        return Combined::Cancel;
    }
    Combined::No
}

/// Moves each CNOT, diagonal gate and X forward through gates it commutes with
/// and cancels or merges it with the first matching partner.
pub fn commutative_cancellation(ops: Vec<GateOp>) -> Vec<GateOp> {
    let mut out: Vec<Option<GateOp>> = ops.into_iter().map(Some).collect();
    for i in 0..out.len() {
        let Some(g) = out[i].clone() else { continue };
        let movable = g.kind == GateKind::Cnot || is_diagonal(&g.kind) || is_x(&g.kind);
        if !movable {
            continue;
        }
        for j in i + 1..out.len() {
            let Some(h) = out[j].as_ref() else { continue };
            if !shares_qubit(&g, h) {
                continue;
            }
            match combine_across(&g, h) {
                Combined::Cancel => {
                    out[i] = None;
                    out[j] = None;
                    break;
                }
                Combined::Into(k) => {
                    out[i] = None;
                    out[j] = k.map(|k| GateOp::one(k, g.qubits[0]));
                    break;
                }
                Combined::No => {}
            }
            if !commutes(&g, h) {
                break;
            }
        }
    }
    out.into_iter().flatten().collect()
}

/// Replaces every maximal run of two or more single-qubit gates on a wire, or
/// a lone identity, by its cheapest resynthesised equivalent.
pub fn resynthesize_runs(ops: Vec<GateOp>) -> Vec<GateOp> {
    let width = ops
        .iter()
        .flat_map(|o| o.qubits.iter())
        .max()
        .map_or(0, |m| m + 1);
    let mut out: Vec<Option<GateOp>> = ops.into_iter().map(Some).collect();
    let mut runs: Vec<Vec<usize>> = vec![Vec::new(); width];
    let flush = |out: &mut Vec<Option<GateOp>>, run: &mut Vec<usize>| {
        if run.is_empty() {
            return;
        }
        let kinds: Vec<GateKind> = run
            .iter()
            .map(|&i| out[i].as_ref().expect("live").kind)
            .collect();
        if run.len() == 1 && !is_identity(&kinds[0]) {
            run.clear();
            return;
        }
        let q = out[run[0]].as_ref().expect("live").qubits[0];
        let (u3, _) = resynthesize_1q(&kinds);
        let GateKind::U3(t, p, l) = u3 else {
            unreachable!("resynthesis yields U3")
        };
        let last = *run.last().expect("nonempty");
        for &i in run.iter() {
            out[i] = None;
        }
        out[last] = simplify_u3(t, p, l).map(|k| GateOp::one(k, q));
        run.clear();
    };
    for i in 0..out.len() {
        let op = out[i].as_ref().expect("live");
        if is_one_qubit(op) {
            runs[op.qubits[0]].push(i);
        } else {
            for q in op.qubits.clone() {
                flush(&mut out, &mut runs[q]);
            }
        }
    }
    for run in runs.iter_mut() {
        flush(&mut out, run);
    }
    out.into_iter().flatten().collect()
}
