//! Monte-Carlo Pauli trajectories driven by device calibration.
//!
//! Every 1-qubit gate is followed, with probability `u2_error(q)`, by a
//! uniformly chosen X, Y or Z on its qubit. Every 2-qubit gate is followed,
//! with probability `cnot_error(edge)`, by one of the 15 non-identity 2-qubit
//! Paulis. Each measured bit is flipped with probability `readout_error(q)`.
//!
//! Shot `i` draws from its own ChaCha8 stream (see [`super::counts`]): the
//! first draw selects the measurement outcome, the rest select error sites.
//! Error sites are found by inverting the survival function, so a shot costs
//! one draw per error rather than one per gate. Outcome distributions of
//! erroneous trajectories are cached per error pattern within a call.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::rc::Rc;

use num_complex::Complex64;
use rand::Rng;

use super::counts::{base_rng, cumulative, draw, shot_rng};
use super::statevector::{Kernel, Statevector, MAX_WIDTH};
use super::{ShotCounts, SimError};
use crate::circuit::{GateKind, QuantumCircuit};
use crate::device::{edge, DeviceModel};

/// Upper bound on amplitudes kept as per-site checkpoints.
const CHECKPOINT_BUDGET: usize = 1 << 22;

/// Depolarising and readout rates per physical qubit and coupling edge.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    one_qubit: Vec<f64>,
    two_qubit: BTreeMap<(usize, usize), f64>,
    readout: Vec<f64>,
}

impl NoiseSpec {
    pub fn from_device(d: &DeviceModel) -> Self {
        let n = d.n_qubits();
        Self {
            one_qubit: (0..n).map(|q| d.u2_error(q)).collect(),
            two_qubit: d
                .coupling()
                .iter()
                .map(|&(a, b)| ((a, b), d.cnot_error(a, b).unwrap_or(0.0)))
                .collect(),
            readout: (0..n).map(|q| d.readout_error(q)).collect(),
        }
    }

    pub fn noiseless(n_qubits: usize) -> Self {
        Self {
            one_qubit: vec![0.0; n_qubits],
            two_qubit: BTreeMap::new(),
            readout: vec![0.0; n_qubits],
        }
    }

    pub fn one_qubit(&self, q: usize) -> f64 {
        self.one_qubit.get(q).copied().unwrap_or(0.0)
    }

    pub fn two_qubit(&self, a: usize, b: usize) -> f64 {
        self.two_qubit.get(&edge(a, b)).copied().unwrap_or(0.0)
    }

    pub fn readout(&self, q: usize) -> f64 {
        self.readout.get(q).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
enum SiteKind {
    /// After a 1-qubit gate, on compact qubit.
    One(usize),
    /// After a 2-qubit gate, on compact operands in gate order.
    Two(usize, usize),
    /// Readout flip of the k-th measured qubit (ascending order).
    Readout(usize),
}

#[derive(Debug, Clone, Copy)]
struct Site {
    op: usize,
    kind: SiteKind,
}

/// A circuit prepared for repeated noisy sampling.
pub struct NoisyProgram {
    width: usize,
    kernels: Vec<Kernel>,
    sites: Vec<Site>,
    /// `log_survival[k]` = sum of ln(1 - p) over non-certain sites before `k`.
    log_survival: Vec<f64>,
    /// Index of the first certain (p = 1) site at or after `k`; `sites.len()` if none.
    next_certain: Vec<usize>,
    measured_compact: Vec<usize>,
    measured_physical: Vec<usize>,
    noiseless_cdf: Vec<f64>,
    /// Statevector right after the op of each gate site, when affordable.
    checkpoints: Option<Vec<Vec<Complex64>>>,
}

impl NoisyProgram {
    pub fn new(c: &QuantumCircuit, noise: &NoiseSpec) -> Result<Self, SimError> {
        let active: Vec<usize> = c.active_qubits().into_iter().collect();
        let width = active.len();
        if width > MAX_WIDTH {
            return Err(SimError::TooWide {
                width,
                cap: MAX_WIDTH,
            });
        }
        let compact = |q: usize| active.binary_search(&q).expect("active qubit");
        let mut kernels = Vec::with_capacity(c.ops().len());
        let mut sites = Vec::new();
        let mut rates = Vec::new();
        for (i, op) in c.ops().iter().enumerate() {
            let mut lowered = op.clone();
            lowered.qubits = op.qubits.iter().map(|&q| compact(q)).collect();
            kernels.push(Kernel::lower(&lowered));
            let (kind, rate) = match *op.qubits.as_slice() {
                [q] => (SiteKind::One(compact(q)), noise.one_qubit(q)),
                [a, b] => (SiteKind::Two(compact(a), compact(b)), noise.two_qubit(a, b)),
                _ => continue,
            };
            if rate > 0.0 {
                sites.push(Site { op: i, kind });
                rates.push(rate);
            }
        }
        let gate_sites = sites.len();
        let measured_physical: Vec<usize> = c.measured().iter().copied().collect();
        let measured_compact: Vec<usize> = measured_physical.iter().map(|&q| compact(q)).collect();
        for (k, &q) in measured_physical.iter().enumerate() {
            let rate = noise.readout(q);
            if rate > 0.0 {
                sites.push(Site {
                    op: c.ops().len(),
                    kind: SiteKind::Readout(k),
                });
                rates.push(rate);
            }
        }

        let mut log_survival = Vec::with_capacity(rates.len() + 1);
        let mut acc = 0.0;
        log_survival.push(acc);
        for &p in &rates {
            if p < 1.0 {
                acc += (-p).ln_1p();
            }
            log_survival.push(acc);
        }
        let mut next_certain = vec![rates.len(); rates.len() + 1];
        for k in (0..rates.len()).rev() {
            next_certain[k] = if rates[k] >= 1.0 {
                k
            } else {
                next_certain[k + 1]
            };
        }

        let keep = gate_sites.saturating_mul(1 << width) <= CHECKPOINT_BUDGET;
        let mut checkpoints = keep.then(|| Vec::with_capacity(gate_sites));
        let mut sv = Statevector::zero(width)?;
        let mut next_site = 0;
        for (i, k) in kernels.iter().enumerate() {
            sv.apply_kernel(k);
            if let Some(cp) = checkpoints.as_mut() {
                while next_site < gate_sites && sites[next_site].op == i {
                    cp.push(sv.amplitudes().to_vec());
                    next_site += 1;
                }
            }
        }
        let noiseless_cdf = cumulative(&sv.outcome_probabilities(&measured_compact));

        Ok(Self {
            width,
            kernels,
            sites,
            log_survival,
            next_certain,
            measured_compact,
            measured_physical,
            noiseless_cdf,
            checkpoints,
        })
    }

    /// Counts for shots `shots.start..shots.end` under `seed`.
    pub fn run(&self, seed: u64, shots: Range<u64>) -> ShotCounts {
        let base = base_rng(seed);
        let mut tallies = vec![0u64; self.noiseless_cdf.len()];
        let mut cache: HashMap<Vec<(u32, u8)>, Rc<Vec<f64>>> = HashMap::new();
        let mut pattern: Vec<(u32, u8)> = Vec::new();
        for shot in shots {
            let mut rng = shot_rng(&base, shot);
            let u_outcome: f64 = rng.random();
            pattern.clear();
            let mut flips = 0usize;
            let n = self.sites.len();
            let mut j = 0;
            while j < n {
                let certain = self.next_certain[j];
                let u: f64 = rng.random();
                let target = u.ln() + self.log_survival[j];
                // First k in [j, certain) with log_survival[k + 1] < target.
                let window = &self.log_survival[j + 1..=certain];
                let offset = window.partition_point(|&s| s >= target);
                let k = if offset < window.len() {
                    j + offset
                } else {
                    certain
                };
                if k >= n {
                    break;
                }
                match self.sites[k].kind {
                    SiteKind::One(_) => pattern.push((k as u32, rng.random_range(1..4u8))),
                    SiteKind::Two(..) => pattern.push((k as u32, rng.random_range(1..16u8))),
                    SiteKind::Readout(bit) => flips |= 1 << bit,
                }
                j = k + 1;
            }
            let outcome = if pattern.is_empty() {
                draw(&self.noiseless_cdf, u_outcome)
            } else {
                let cdf = match cache.get(&pattern) {
                    Some(cdf) => Rc::clone(cdf),
                    None => {
                        let cdf = Rc::new(self.trajectory_cdf(&pattern));
                        cache.insert(pattern.clone(), Rc::clone(&cdf));
                        cdf
                    }
                };
                draw(&cdf, u_outcome)
            };
            tallies[outcome ^ flips] += 1;
        }
        ShotCounts::from_tallies(&self.measured_physical, &tallies)
    }

    fn trajectory_cdf(&self, pattern: &[(u32, u8)]) -> Vec<f64> {
        let first = self.sites[pattern[0].0 as usize];
        let mut sv = match &self.checkpoints {
            Some(cp) => Statevector::from_amplitudes(self.width, cp[pattern[0].0 as usize].clone()),
            None => {
                let mut sv = Statevector::zero(self.width).expect("width checked");
                for k in &self.kernels[..=first.op] {
                    sv.apply_kernel(k);
                }
                sv
            }
        };
        let mut next = 0;
        let mut op = first.op;
        loop {
            while next < pattern.len() && self.sites[pattern[next].0 as usize].op == op {
                let (site, pauli) = pattern[next];
                match self.sites[site as usize].kind {
                    SiteKind::One(q) => sv.apply_pauli(q, pauli),
                    SiteKind::Two(a, b) => {
                        sv.apply_pauli(a, pauli / 4);
                        sv.apply_pauli(b, pauli % 4);
                    }
                    SiteKind::Readout(_) => unreachable!("readout flips are not in the pattern"),
                }
                next += 1;
            }
            op += 1;
            if op >= self.kernels.len() {
                break;
            }
            sv.apply_kernel(&self.kernels[op]);
        }
        cumulative(&sv.outcome_probabilities(&self.measured_compact))
    }
}

/// Checks that `c` only uses {U1, U2, U3, CNOT} and that every CNOT sits on a
/// coupling edge of `d`.
pub fn check_device_legal(c: &QuantumCircuit, d: &DeviceModel) -> Result<(), SimError> {
    if c.width() > d.n_qubits() {
        return Err(SimError::Illegal {
            index: None,
            reason: format!(
                "circuit width {} exceeds device size {}",
                c.width(),
                d.n_qubits()
            ),
        });
    }
    for (i, op) in c.ops().iter().enumerate() {
        if !op.kind.is_basis() {
            return Err(SimError::Illegal {
                index: Some(i),
                reason: format!("{} is outside the device basis", op.kind.name()),
            });
        }
        if op.kind == GateKind::Cnot && !d.is_edge(op.qubits[0], op.qubits[1]) {
            return Err(SimError::Illegal {
                index: Some(i),
                reason: format!("cx on uncoupled pair ({},{})", op.qubits[0], op.qubits[1]),
            });
        }
    }
    Ok(())
}

/// Noisy execution of a device-legal circuit.
pub fn run_noisy(
    c: &QuantumCircuit,
    d: &DeviceModel,
    shots: u64,
    seed: u64,
) -> Result<ShotCounts, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    check_device_legal(c, d)?;
    Ok(NoisyProgram::new(c, &NoiseSpec::from_device(d))?.run(seed, 0..shots))
}

/// Total-variation distance between two empirical distributions.
pub fn total_variation(a: &ShotCounts, b: &ShotCounts) -> f64 {
    let fa = a.frequencies();
    let fb = b.frequencies();
    let keys: std::collections::BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (fa.get(k).unwrap_or(&0.0) - fb.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesnet::NodeId;
    use crate::circuit::{CircuitBuilder, QubitRole};
    use crate::sim::{evolve, sample};

    fn line(n: usize) -> DeviceModel {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        DeviceModel::uniform("line", n, &edges, 0.0, 0.0, 0.0).unwrap()
    }

    fn bell_like() -> QuantumCircuit {
        let mut b = CircuitBuilder::new(3);
        b.push(GateKind::U3(1.1, 0.2, 0.3), &[0]).unwrap();
        b.push(GateKind::Cnot, &[0, 1]).unwrap();
        b.push(GateKind::U2(0.4, -0.1), &[2]).unwrap();
        b.push(GateKind::Cnot, &[1, 2]).unwrap();
        b.push(GateKind::U1(0.7), &[1]).unwrap();
        for q in 0..3 {
            b.role(q, QubitRole::Node(NodeId(q))).measure(q);
        }
        b.build().unwrap()
    }

    #[test]
    fn zero_rates_reproduce_noiseless_sampling_exactly() {
        let c = bell_like();
        let noisy = run_noisy(&c, &line(3), 4000, 21).unwrap();
        let clean = sample(&evolve(&c).unwrap(), &[0, 1, 2], 4000, 21).unwrap();
        assert_eq!(noisy, clean);
    }

    #[test]
    fn readout_flip_rate() {
        let mut b = CircuitBuilder::new(1);
        b.role(0, QubitRole::Node(NodeId(0))).measure(0);
        let c = b.build().unwrap();
        let d = DeviceModel::uniform("one", 1, &[], 0.0, 0.0, 0.0)
            .unwrap()
            .with_readout_error(0, 0.1)
            .unwrap();
        let counts = run_noisy(&c, &d, 100_000, 5).unwrap();
        let f = counts.get("1") as f64 / 1e5;
        assert!((f - 0.10).abs() <= 0.004, "{f}");
    }

    #[test]
    fn certain_errors_always_fire() {
        // X then certain depolarising noise on a second gate: every trajectory errs.
        let mut b = CircuitBuilder::new(1);
        b.push(GateKind::U3(0.0, 0.0, 0.0), &[0]).unwrap();
        b.role(0, QubitRole::Node(NodeId(0))).measure(0);
        let c = b.build().unwrap();
        let d = DeviceModel::uniform("one", 1, &[], 1.0, 0.0, 1.0).unwrap();
        let counts = run_noisy(&c, &d, 30_000, 8).unwrap();
        // P(X or Y) = 2/3 flips the state, then the readout flip always fires.
        let f0 = counts.get("0") as f64 / 30_000.0;
        assert!((f0 - 2.0 / 3.0).abs() < 0.02, "{f0}");
    }

    #[test]
    fn two_qubit_error_frequency_matches_rate() {
        // CNOT on |00> with rate p: outcome is non-00 iff the Pauli has an X or Y
        // component on either qubit, which is 12 of the 15 choices.
        let mut b = CircuitBuilder::new(2);
        b.push(GateKind::Cnot, &[0, 1]).unwrap();
        for q in 0..2 {
            b.role(q, QubitRole::Node(NodeId(q))).measure(q);
        }
        let c = b.build().unwrap();
        let d = line(2).with_cnot_error(0, 1, 0.3).unwrap();
        let counts = run_noisy(&c, &d, 200_000, 17).unwrap();
        let f = 1.0 - counts.get("00") as f64 / 200_000.0;
        let want = 0.3 * 12.0 / 15.0;
        assert!(
            (f - want).abs() < 4.0 * (want * (1.0 - want) / 2e5).sqrt(),
            "{f} vs {want}"
        );
    }

    #[test]
    fn split_runs_merge_to_whole_run() {
        let c = bell_like();
        let d = line(3)
            .with_cnot_error(0, 1, 0.2)
            .unwrap()
            .with_u2_error(2, 0.1)
            .unwrap();
        let program = NoisyProgram::new(&c, &NoiseSpec::from_device(&d)).unwrap();
        let whole = program.run(99, 0..3000);
        let mut parts = program.run(99, 0..1234);
        parts.merge(&program.run(99, 1234..3000)).unwrap();
        assert_eq!(whole, parts);
    }

    #[test]
    fn checkpoints_do_not_change_results() {
        let c = bell_like();
        let d = line(3)
            .with_cnot_error(1, 2, 0.25)
            .unwrap()
            .with_u2_error(0, 0.2)
            .unwrap();
        let mut program = NoisyProgram::new(&c, &NoiseSpec::from_device(&d)).unwrap();
        let with = program.run(4, 0..2000);
        program.checkpoints = None;
        assert_eq!(with, program.run(4, 0..2000));
    }

    #[test]
    fn illegal_circuits_rejected() {
        let mut b = CircuitBuilder::new(3);
        b.push(GateKind::Cnot, &[0, 2]).unwrap();
        let c = b.build().unwrap();
        assert!(matches!(
            run_noisy(&c, &line(3), 10, 1),
            Err(SimError::Illegal { index: Some(0), .. })
        ));
        let mut b = CircuitBuilder::new(2);
        b.push(GateKind::Ry(0.3), &[0]).unwrap();
        let c = b.build().unwrap();
        assert!(matches!(
            run_noisy(&c, &line(3), 10, 1),
            Err(SimError::Illegal { .. })
        ));
        assert!(matches!(
            run_noisy(&bell_like(), &line(2), 10, 1),
            Err(SimError::Illegal { index: None, .. })
        ));
    }

    #[test]
    fn idle_device_qubits_are_not_simulated() {
        let mut b = CircuitBuilder::new(20);
        b.push(GateKind::U3(0.5, 0.0, 0.0), &[19]).unwrap();
        b.role(19, QubitRole::Node(NodeId(0))).measure(19);
        let c = b.build().unwrap();
        let program = NoisyProgram::new(&c, &NoiseSpec::noiseless(20)).unwrap();
        assert_eq!(program.width, 1);
        let counts = program.run(1, 0..10);
        assert_eq!(counts.qubits, vec![19]);
    }
}
