use num_complex::Complex64;

use crate::circuit::{gate_matrix, GateKind, GateOp, QuantumCircuit};

use super::SimError;

/// Widest register [`evolve`] accepts.
pub const MAX_WIDTH: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pure state over `width` qubits, qubit 0 in the lowest index bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    width: usize,
    amps: Vec<Complex64>,
}

/// A gate lowered to the form the amplitude loops consume.
#[derive(Debug, Clone)]
pub(crate) enum Kernel {
    Single {
        q: usize,
        m: [Complex64; 4],
    },
    Cnot {
        c: usize,
        t: usize,
    },
    Dense {
        qubits: Vec<usize>,
        m: Vec<Complex64>,
    },
}

impl Kernel {
    pub(crate) fn lower(op: &GateOp) -> Self {
        match op.kind {
            GateKind::Cnot => Kernel::Cnot {
                c: op.qubits[0],
                t: op.qubits[1],
            },
            k if k.arity() == 1 => {
                let g = gate_matrix(&k);
                Kernel::Single {
                    q: op.qubits[0],
                    m: [g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]],
                }
            }
            k => {
                let g = gate_matrix(&k);
                let n = g.nrows();
                let m = (0..n * n).map(|i| g[(i / n, i % n)]).collect();
                Kernel::Dense {
                    qubits: op.qubits.clone(),
                    m,
                }
            }
        }
    }
}

impl Statevector {
    /// `|0...0>` on `width` qubits.
    pub fn zero(width: usize) -> Result<Self, SimError> {
        if width > MAX_WIDTH {
            return Err(SimError::TooWide {
                width,
                cap: MAX_WIDTH,
            });
        }
        let mut amps = vec![ZERO; 1 << width];
        amps[0] = ONE;
        Ok(Self { width, amps })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub(crate) fn from_amplitudes(width: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << width);
        Self { width, amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability of each outcome over `qubits`, where bit `k` of the outcome
    /// index is the value of `qubits[k]`.
    pub fn outcome_probabilities(&self, qubits: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let k = qubits
                .iter()
                .enumerate()
                .fold(0usize, |acc, (pos, &q)| acc | (((i >> q) & 1) << pos));
            out[k] += a.norm_sqr();
        }
        out
    }

    pub fn apply(&mut self, op: &GateOp) {
        self.apply_kernel(&Kernel::lower(op));
    }

    pub(crate) fn apply_kernel(&mut self, k: &Kernel) {
        match k {
            Kernel::Single { q, m } => apply_single(&mut self.amps, *q, m),
            Kernel::Cnot { c, t } => {
                let (cm, tm) = (1usize << c, 1usize << t);
                for i in 0..self.amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amps.swap(i, i | tm);
                    }
                }
            }
            Kernel::Dense { qubits, m } => apply_dense(&mut self.amps, qubits, m),
        }
        debug_assert!(
            (self.norm_sqr() - 1.0).abs() < 1e-9,
            "normalisation drifted"
        );
    }

    /// Applies Pauli `p` (1 = X, 2 = Y, 3 = Z; 0 is identity) to qubit `q`.
    pub(crate) fn apply_pauli(&mut self, q: usize, p: u8) {
        let mask = 1usize << q;
        match p {
            0 => {}
            1 => {
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        self.amps.swap(i, i | mask);
                    }
                }
            }
            2 => {
                let i_unit = Complex64::new(0.0, 1.0);
                for i in 0..self.amps.len() {
                    if i & mask == 0 {
                        let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                        self.amps[i] = -i_unit * a1;
                        self.amps[i | mask] = i_unit * a0;
                    }
                }
            }
            3 => {
                for i in 0..self.amps.len() {
                    if i & mask != 0 {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
            _ => unreachable!("pauli index {p}"),
        }
    }
}

fn apply_single(amps: &mut [Complex64], q: usize, m: &[Complex64; 4]) {
    let mask = 1usize << q;
    for i in 0..amps.len() {
        if i & mask == 0 {
            let (a0, a1) = (amps[i], amps[i | mask]);
            amps[i] = m[0] * a0 + m[1] * a1;
            amps[i | mask] = m[2] * a0 + m[3] * a1;
        }
    }
}

fn apply_dense(amps: &mut [Complex64], qubits: &[usize], m: &[Complex64]) {
    let k = qubits.len();
    let n = 1usize << k;
    let op_mask: usize = qubits.iter().map(|q| 1usize << q).sum();
    // Offset of local index `l`; operand 0 is the most significant local bit.
    let offsets: Vec<usize> = (0..n)
        .map(|l| {
            qubits
                .iter()
                .enumerate()
                .map(|(pos, &q)| ((l >> (k - 1 - pos)) & 1) << q)
                .sum()
        })
        .collect();
    let mut buf = vec![ZERO; n];
    for base in 0..amps.len() {
        if base & op_mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &m[r * n..(r + 1) * n];
            amps[base | off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// Noiseless final state of a circuit started in `|0...0>`.
pub fn evolve(c: &QuantumCircuit) -> Result<Statevector, SimError> {
    let mut sv = Statevector::zero(c.width())?;
    for op in c.ops() {
        sv.apply(op);
    }
    Ok(sv)
}
