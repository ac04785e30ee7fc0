//! Greedy SWAP insertion along shortest paths.

use crate::circuit::{GateKind, GateOp};
use crate::device::DeviceModel;

use super::decompose::decompose_swap;

/// Placement of virtual qubits on physical ones.
///
/// Always a bijection over the whole device: virtual qubits beyond the
/// circuit's width are idle placeholders that SWAPs may move around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    phys_of: Vec<usize>,
    virt_of: Vec<usize>,
}

impl Layout {
    /// Builds the full bijection from `placement[v]` for the first
    /// `placement.len()` virtual qubits; the rest fill free physical qubits in
    /// ascending order.
    pub fn new(placement: &[usize], n_physical: usize) -> Self {
        let mut virt_of = vec![usize::MAX; n_physical];
        for (v, &p) in placement.iter().enumerate() {
            assert!(p < n_physical, "physical qubit {p} out of range");
            assert_eq!(virt_of[p], usize::MAX, "physical qubit {p} used twice");
            virt_of[p] = v;
        }
        let free = virt_of.iter_mut().filter(|s| **s == usize::MAX);
        for (v, slot) in (placement.len()..).zip(free) {
            *slot = v;
        }
        let mut phys_of = vec![0; n_physical];
        for (p, &v) in virt_of.iter().enumerate() {
            phys_of[v] = p;
        }
        Self { phys_of, virt_of }
    }

    pub fn trivial(n_physical: usize) -> Self {
        Self::new(&[], n_physical)
    }

    pub fn physical(&self, virt: usize) -> usize {
        self.phys_of[virt]
    }

    pub fn virtual_at(&self, phys: usize) -> usize {
        self.virt_of[phys]
    }

    /// Physical positions of the first `width` virtual qubits.
    pub fn placement(&self, width: usize) -> Vec<usize> {
        self.phys_of[..width].to_vec()
    }

    pub fn n_physical(&self) -> usize {
        self.phys_of.len()
    }

    fn swap_physical(&mut self, a: usize, b: usize) {
        let (va, vb) = (self.virt_of[a], self.virt_of[b]);
        self.virt_of.swap(a, b);
        self.phys_of[va] = b;
        self.phys_of[vb] = a;
    }
}

/// A routed gate list on physical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub ops: Vec<GateOp>,
    pub final_layout: Layout,
    pub swaps: usize,
}

/// Routes basis-level `ops` over virtual qubits onto `d`, starting from
/// `layout`. Each CNOT on uncoupled qubits first walks its control along the
/// device's shortest path toward the target, one SWAP (3 CNOTs) per step.
pub fn route(ops: &[GateOp], d: &DeviceModel, layout: &Layout) -> Routed {
    let mut layout = layout.clone();
    let mut out = Vec::with_capacity(ops.len());
    let mut swaps = 0;
    for op in ops {
        if op.kind == GateKind::Cnot {
            let (c, t) = (op.qubits[0], op.qubits[1]);
            let path = d.shortest_path(layout.physical(c), layout.physical(t));
            // path = [pc, ..., pt]; stop once the control sits next to pt.
            for w in path.windows(2).take(path.len().saturating_sub(2)) {
                out.extend(decompose_swap(w[0], w[1]));
                layout.swap_physical(w[0], w[1]);
                swaps += 1;
            }
            out.push(GateOp::cnot(layout.physical(c), layout.physical(t)));
        } else {
            debug_assert_eq!(op.qubits.len(), 1, "routing expects basis gates");
            let qubits: Vec<usize> = op.qubits.iter().map(|&q| layout.physical(q)).collect();
            out.push(GateOp::new(op.kind, &qubits));
        }
    }
    Routed {
        ops: out,
        final_layout: layout,
        swaps,
    }
}
