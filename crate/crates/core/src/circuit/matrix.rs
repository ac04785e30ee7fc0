//! Exact matrix semantics for gates and whole circuits.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CircuitError, GateKind, QuantumCircuit};

pub type Matrix = DMatrix<Complex64>;

/// Widest circuit [`circuit_unitary`] will expand by default.
pub const DEFAULT_UNITARY_CAP: usize = 12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn u3(theta: f64, phi: f64, lambda: f64) -> Matrix {
    let (s, co) = (theta / 2.0).sin_cos();
    Matrix::from_row_slice(
        2,
        2,
        &[
            c(co, 0.0),
            -Complex64::from_polar(s, lambda),
            Complex64::from_polar(s, phi),
            Complex64::from_polar(co, phi + lambda),
        ],
    )
}

/// Block-diagonal `[[I, 0], [0, u]]` with `controls` control qubits.
fn controlled(u: &Matrix, controls: u32) -> Matrix {
    let n = u.nrows();
    let dim = n << controls;
    let mut m = Matrix::identity(dim, dim);
    let off = dim - n;
    for i in 0..n {
        for j in 0..n {
            m[(off + i, off + j)] = u[(i, j)];
        }
    }
    m
}

/// Unitary of a gate in its local operand basis.
///
/// Operand 0 is the most significant bit of the local index, so controls
/// form the high-order block index.
pub fn gate_matrix(kind: &GateKind) -> Matrix {
    match *kind {
        GateKind::X => Matrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        GateKind::H => {
            let h = FRAC_1_SQRT_2;
            Matrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])
        }
        GateKind::S => u3(0.0, 0.0, FRAC_PI_2),
        GateKind::T => u3(0.0, 0.0, FRAC_PI_4),
        GateKind::Tdg => u3(0.0, 0.0, -FRAC_PI_4),
        GateKind::U1(l) => u3(0.0, 0.0, l),
        GateKind::U2(p, l) => u3(FRAC_PI_2, p, l),
        GateKind::U3(t, p, l) => u3(t, p, l),
        GateKind::Ry(t) => u3(t, 0.0, 0.0),
        GateKind::Cnot => controlled(&gate_matrix(&GateKind::X), 1),
        GateKind::Cry(t) => controlled(&u3(t, 0.0, 0.0), 1),
        GateKind::Swap => {
            let mut m = Matrix::zeros(4, 4);
            for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                m[(i, j)] = c(1.0, 0.0);
            }
            m
        }
        GateKind::Ccnot => controlled(&gate_matrix(&GateKind::X), 2),
        GateKind::Ccry(t) => controlled(&u3(t, 0.0, 0.0), 2),
    }
}

/// Full `2^w x 2^w` unitary of a circuit, widths up to [`DEFAULT_UNITARY_CAP`].
pub fn circuit_unitary(c: &QuantumCircuit) -> Result<Matrix, CircuitError> {
    circuit_unitary_with_cap(c, DEFAULT_UNITARY_CAP)
}

pub fn circuit_unitary_with_cap(c: &QuantumCircuit, cap: usize) -> Result<Matrix, CircuitError> {
    let w = c.width();
    if w > cap {
        return Err(CircuitError::TooWide { width: w, cap });
    }
    let dim = 1usize << w;
    let mut u = Matrix::identity(dim, dim);
    for op in c.ops() {
        let g = gate_matrix(&op.kind);
        let k = op.qubits.len();
        let local = |i: usize| {
            op.qubits
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((i >> q) & 1))
        };
        let with_local = |i: usize, m: usize| {
            op.qubits.iter().enumerate().fold(i, |acc, (pos, &q)| {
                let bit = (m >> (k - 1 - pos)) & 1;
                (acc & !(1 << q)) | (bit << q)
            })
        };
        let mut next = Matrix::zeros(dim, dim);
        for i in 0..dim {
            let li = local(i);
            for m in 0..(1usize << k) {
                let gim = g[(li, m)];
                if gim == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let j = with_local(i, m);
                for col in 0..dim {
                    next[(i, col)] += gim * u[(j, col)];
                }
            }
        }
        u = next;
    }
    Ok(u)
}

/// True iff `u = e^{iα} v` for some α, with every entry within `tol`.
pub fn unitaries_equivalent(u: &Matrix, v: &Matrix, tol: f64) -> Result<bool, CircuitError> {
    if u.shape() != v.shape() {
        return Err(CircuitError::DimensionMismatch(u.nrows(), v.nrows()));
    }
    let overlap: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| b.conj() * a).sum();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(u.iter()
        .zip(v.iter())
        .all(|(a, b)| (a - phase * b).norm() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, GateOp};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn all_kinds(t: f64, p: f64, l: f64) -> Vec<GateKind> {
        vec![
            GateKind::X,
            GateKind::H,
            GateKind::S,
            GateKind::T,
            GateKind::Tdg,
            GateKind::U1(l),
            GateKind::U2(p, l),
            GateKind::U3(t, p, l),
            GateKind::Ry(t),
            GateKind::Cnot,
            GateKind::Cry(t),
            GateKind::Swap,
            GateKind::Ccnot,
            GateKind::Ccry(t),
        ]
    }

    fn max_dev(a: &Matrix, b: &Matrix) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ry_matches_rotation_form() {
        let t = 0.83;
        let m = gate_matrix(&GateKind::Ry(t));
        let (s, co) = (t / 2.0).sin_cos();
        let want = Matrix::from_row_slice(2, 2, &[c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)]);
        assert!(max_dev(&m, &want) < 1e-15);
        assert!(max_dev(&gate_matrix(&GateKind::Ry(0.0)), &Matrix::identity(2, 2)) < 1e-15);
        assert_eq!(gate_matrix(&GateKind::U3(t, 0.0, 0.0)), m);
    }

    #[test]
    fn basis_gate_matrices() {
        let s = gate_matrix(&GateKind::S);
        assert!((s[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
        let t = gate_matrix(&GateKind::T);
        assert!((t[(1, 1)] - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        let h = gate_matrix(&GateKind::H);
        assert!((h[(1, 1)].re + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let u = circuit_unitary(&QuantumCircuit::empty(3)).unwrap();
        assert_eq!(u, Matrix::identity(8, 8));
    }

    #[test]
    fn single_cnot_circuit() {
        let mut b = CircuitBuilder::new(2);
        b.push(GateKind::Cnot, &[1, 0]).unwrap();
        let u = circuit_unitary(&b.build().unwrap()).unwrap();
        // Control is qubit 1 (high bit), so the operand order matches the local basis.
        assert!(max_dev(&u, &gate_matrix(&GateKind::Cnot)) < 1e-15);

        // With the control on qubit 0 the matrix swaps |01> and |11>.
        let mut b = CircuitBuilder::new(2);
        b.push(GateKind::Cnot, &[0, 1]).unwrap();
        let u = circuit_unitary(&b.build().unwrap()).unwrap();
        assert_eq!(u[(3, 1)], c(1.0, 0.0));
        assert_eq!(u[(1, 3)], c(1.0, 0.0));
        assert_eq!(u[(0, 0)], c(1.0, 0.0));
        assert_eq!(u[(2, 2)], c(1.0, 0.0));
    }

    #[test]
    fn x_is_an_involution() {
        let mut b = CircuitBuilder::new(1);
        b.push(GateKind::X, &[0])
            .unwrap()
            .push(GateKind::X, &[0])
            .unwrap();
        let u = circuit_unitary(&b.build().unwrap()).unwrap();
        assert!(max_dev(&u, &Matrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn width_cap() {
        assert_eq!(
            circuit_unitary_with_cap(&QuantumCircuit::empty(5), 4),
            Err(CircuitError::TooWide { width: 5, cap: 4 })
        );
    }

    #[test]
    fn equivalence_basics() {
        let u = gate_matrix(&GateKind::U3(0.3, 1.1, -0.4));
        assert!(unitaries_equivalent(&u, &(-u.clone()), 1e-12).unwrap());
        assert!(!unitaries_equivalent(
            &gate_matrix(&GateKind::Cnot),
            &gate_matrix(&GateKind::Swap),
            1e-6
        )
        .unwrap());
        assert_eq!(
            unitaries_equivalent(&u, &gate_matrix(&GateKind::Cnot), 1e-6),
            Err(CircuitError::DimensionMismatch(2, 4))
        );
    }

    #[test]
    fn controlled_rotation_uses_high_control_bit() {
        let m = gate_matrix(&GateKind::Cry(1.0));
        let r = gate_matrix(&GateKind::Ry(1.0));
        assert!(
            max_dev(
                &m.view((0, 0), (2, 2)).into_owned(),
                &Matrix::identity(2, 2)
            ) < 1e-15
        );
        assert!(max_dev(&m.view((2, 2), (2, 2)).into_owned(), &r) < 1e-15);
    }

    proptest! {
        #[test]
        fn every_gate_matrix_is_unitary(t in -7.0f64..7.0, p in -7.0f64..7.0, l in -7.0f64..7.0) {
            for k in all_kinds(t, p, l) {
                let m = gate_matrix(&k);
                let n = m.nrows();
                let prod = m.adjoint() * &m;
                prop_assert!(max_dev(&prod, &Matrix::identity(n, n)) < 1e-12, "{k:?}");
            }
        }

        #[test]
        fn circuit_unitary_is_multiplicative(
            gates in proptest::collection::vec((0usize..14, 0usize..3, 0usize..3, 0usize..3, -3.0f64..3.0), 0..12),
            split in 0usize..12,
        ) {
            let kinds = |t: f64| all_kinds(t, t * 0.7, -t);
            let mut ops = Vec::new();
            for (k, a, b, cq, t) in gates {
                let kind = kinds(t)[k];
                let qs: Vec<usize> = match kind.arity() {
                    1 => vec![a],
                    2 => if a == b { vec![a, (a + 1) % 3] } else { vec![a, b] },
                    _ => vec![0, 1, 2].into_iter().cycle().skip(cq).take(3).collect(),
                };
                ops.push(GateOp::new(kind, &qs));
            }
            let split = split.min(ops.len());
            let whole = QuantumCircuit::empty(3).with_ops(ops.clone()).unwrap();
            let first = QuantumCircuit::empty(3).with_ops(ops[..split].to_vec()).unwrap();
            let second = QuantumCircuit::empty(3).with_ops(ops[split..].to_vec()).unwrap();
            let uw = circuit_unitary(&whole).unwrap();
            let u12 = circuit_unitary(&second).unwrap() * circuit_unitary(&first).unwrap();
            prop_assert!(max_dev(&uw, &u12) < 1e-10);
            let prod = uw.adjoint() * &uw;
            prop_assert!(max_dev(&prod, &Matrix::identity(8, 8)) < 1e-10);
        }

        #[test]
        fn equivalence_is_phase_invariant(t in -3.0f64..3.0, p in -3.0f64..3.0, l in -3.0f64..3.0, a in -7.0f64..7.0, b in -7.0f64..7.0) {
            let u = gate_matrix(&GateKind::U3(t, p, l));
            let v = u.map(|z| z * Complex64::from_polar(1.0, a));
            let w = u.map(|z| z * Complex64::from_polar(1.0, b));
            prop_assert!(unitaries_equivalent(&u, &u, 1e-12).unwrap());
            prop_assert!(unitaries_equivalent(&v, &w, 1e-12).unwrap());
            prop_assert!(unitaries_equivalent(&w, &v, 1e-12).unwrap());
        }
    }
}
