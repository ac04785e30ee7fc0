//! Initial placement strategies.

use std::collections::BTreeMap;

use crate::circuit::{GateKind, GateOp};
use crate::device::{edge, DeviceModel};

use super::estimated_success;
use super::routing::{route, Layout};

/// Relative slack when collecting the lowest-error edges.
const ERROR_TIE: f64 = 1e-9;

/// CNOT count per unordered logical pair and gate count per logical qubit.
#[derive(Debug, Clone, Default)]
pub struct Traffic {
    pub pairs: BTreeMap<(usize, usize), usize>,
    pub single: Vec<usize>,
}

impl Traffic {
    pub fn of(ops: &[GateOp], width: usize) -> Self {
        let mut t = Self {
            pairs: BTreeMap::new(),
            single: vec![0; width],
        };
        for op in ops {
            match *op.qubits.as_slice() {
                [q] => t.single[q] += 1,
                [a, b] if op.kind == GateKind::Cnot => *t.pairs.entry(edge(a, b)).or_default() += 1,
                _ => {}
            }
        }
        t
    }

    /// Pairs by decreasing traffic, ties by index.
    fn ranked_pairs(&self) -> Vec<((usize, usize), usize)> {
        let mut v: Vec<_> = self.pairs.iter().map(|(&k, &n)| (k, n)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    fn weight(&self, a: usize, b: usize) -> usize {
        self.pairs.get(&edge(a, b)).copied().unwrap_or(0)
    }
}

struct Greedy<'a> {
    d: &'a DeviceModel,
    dist: &'a [Vec<usize>],
    traffic: &'a Traffic,
    phys: Vec<Option<usize>>,
    used: Vec<bool>,
}

impl Greedy<'_> {
    fn place(&mut self, v: usize, p: usize) {
        self.phys[v] = Some(p);
        self.used[p] = true;
    }

    /// Traffic-weighted distance from physical `p` to the placed partners of `v`.
    fn pull(&self, v: usize, p: usize) -> usize {
        self.phys
            .iter()
            .enumerate()
            .filter_map(|(u, pu)| pu.map(|pu| self.traffic.weight(v, u) * self.dist[p][pu]))
            .sum()
    }

    fn free(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.used.len()).filter(|&p| !self.used[p])
    }

    fn cx_error(&self, a: usize, b: usize) -> f64 {
        self.d.cnot_error(a, b).unwrap_or(1.0)
    }

    fn place_pair(&mut self, a: usize, b: usize) {
        match (self.phys[a], self.phys[b]) {
            (Some(_), Some(_)) => {}
            (Some(pa), None) | (None, Some(pa)) => {
                let v = if self.phys[a].is_none() { a } else { b };
                let best = self.free().min_by(|&x, &y| {
                    let kx = (self.pull(v, x), self.cx_error(pa, x), self.d.u2_error(x));
                    let ky = (self.pull(v, y), self.cx_error(pa, y), self.d.u2_error(y));
                    kx.partial_cmp(&ky).expect("finite").then(x.cmp(&y))
                });
                if let Some(p) = best {
                    self.place(v, p);
                }
            }
            (None, None) => {
                let d = self.d;
                let best = d
                    .coupling()
                    .iter()
                    .flat_map(|&(x, y)| [(x, y), (y, x)])
                    .filter(|&(x, y)| !self.used[x] && !self.used[y])
                    .min_by(|&(x1, y1), &(x2, y2)| {
                        let k1 = (self.pull(a, x1) + self.pull(b, y1), self.cx_error(x1, y1));
                        let k2 = (self.pull(a, x2) + self.pull(b, y2), self.cx_error(x2, y2));
                        k1.partial_cmp(&k2)
                            .expect("finite")
                            .then((x1, y1).cmp(&(x2, y2)))
                    });
                match best {
                    Some((x, y)) => {
                        self.place(a, x);
                        self.place(b, y);
                    }
                    None => {
                        // No free edge left: place one end and retry the other.
                        let p = self.free().next().expect("device has room");
                        self.place(a, p);
                        self.place_pair(a, b);
                    }
                }
            }
        }
    }

    fn place_rest(&mut self) {
        let mut rest: Vec<usize> = (0..self.phys.len())
            .filter(|&v| self.phys[v].is_none())
            .collect();
        rest.sort_by(|&x, &y| {
            self.traffic.single[y]
                .cmp(&self.traffic.single[x])
                .then(x.cmp(&y))
        });
        for v in rest {
            let p = self
                .free()
                .min_by(|&x, &y| {
                    let kx = (self.pull(v, x), self.d.u2_error(x));
                    let ky = (self.pull(v, y), self.d.u2_error(y));
                    kx.partial_cmp(&ky).expect("finite").then(x.cmp(&y))
                })
                .expect("device has room");
            self.place(v, p);
        }
    }
}

/// Greedy calibration-aware placement of `width` logical qubits.
///
/// The busiest logical pair goes on one of the lowest-error coupling edges;
/// each following pair goes where it is closest to already placed partners,
/// then on the lowest-error edge; remaining qubits go to the closest, then
/// lowest-`u2_error` free qubit. Every lowest-error edge (in both orientations)
/// is tried as the starting point, and the candidate whose routed gate list
/// has the highest estimated success wins. Ties keep the earliest candidate.
pub fn noise_adaptive_layout(ops: &[GateOp], width: usize, d: &DeviceModel) -> Layout {
    let traffic = Traffic::of(ops, width);
    let dist = d.distances();
    let ranked = traffic.ranked_pairs();
    let n = d.n_qubits();

    let greedy = |start: Option<(usize, usize)>| {
        let mut g = Greedy {
            d,
            dist: &dist,
            traffic: &traffic,
            phys: vec![None; width],
            used: vec![false; n],
        };
        let mut pairs = ranked.iter();
        if let (Some(((a, b), _)), Some((x, y))) = (ranked.first(), start) {
            g.place(*a, x);
            g.place(*b, y);
            pairs.next();
        }
        for &((a, b), _) in pairs {
            g.place_pair(a, b);
        }
        g.place_rest();
        let placement: Vec<usize> = g.phys.iter().map(|p| p.expect("placed")).collect();
        Layout::new(&placement, n)
    };

    if ranked.is_empty() {
        return greedy(None);
    }
    let min_err = d
        .coupling()
        .iter()
        .map(|&(a, b)| d.cnot_error(a, b).unwrap_or(1.0))
        .fold(f64::INFINITY, f64::min);
    let starts: Vec<(usize, usize)> = d
        .coupling()
        .iter()
        .filter(|&&(a, b)| d.cnot_error(a, b).unwrap_or(1.0) <= min_err * (1.0 + ERROR_TIE))
        .flat_map(|&(a, b)| [(a, b), (b, a)])
        .collect();

    let mut best: Option<(f64, Layout)> = None;
    for s in starts {
        let layout = greedy(Some(s));
        let score = estimated_success(&route(ops, d, &layout).ops, d);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, layout));
        }
    }
    best.expect("device has at least one edge").1
}
