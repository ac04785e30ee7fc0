//! Lowering to {U1, U2, U3, CNOT} and single-qubit resynthesis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::circuit::{GateKind, GateOp};

/// Tolerance for recognising special angles during simplification.
pub(crate) const ANGLE_EPS: f64 = 1e-12;

/// `CRY(θ)` as `RY(θ/2) t, CX c t, RY(-θ/2) t, CX c t`. Exact, no phase.
pub fn decompose_cry(theta: f64, control: usize, target: usize) -> Vec<GateOp> {
    vec![
        GateOp::one(GateKind::Ry(theta / 2.0), target),
        GateOp::cnot(control, target),
        GateOp::one(GateKind::Ry(-theta / 2.0), target),
        GateOp::cnot(control, target),
    ]
}

/// Toffoli as 6 CNOT, 7 T/Tdg and 2 H.
pub fn decompose_ccnot(c1: usize, c2: usize, t: usize) -> Vec<GateOp> {
    use GateKind::{Tdg, H, T};
    vec![
        GateOp::one(H, t),
        GateOp::cnot(c2, t),
        GateOp::one(Tdg, t),
        GateOp::cnot(c1, t),
        GateOp::one(T, t),
        GateOp::cnot(c2, t),
        GateOp::one(Tdg, t),
        GateOp::cnot(c1, t),
        GateOp::one(T, c2),
        GateOp::one(T, t),
        GateOp::one(H, t),
        GateOp::cnot(c1, c2),
        GateOp::one(T, c1),
        GateOp::one(Tdg, c2),
        GateOp::cnot(c1, c2),
    ]
}

/// Doubly controlled `RY(θ)` in terms of `CRY` and CNOT.
pub fn decompose_ccry(theta: f64, c1: usize, c2: usize, t: usize) -> Vec<GateOp> {
    vec![
        GateOp::new(GateKind::Cry(theta / 2.0), &[c2, t]),
        GateOp::cnot(c1, c2),
        GateOp::new(GateKind::Cry(-theta / 2.0), &[c2, t]),
        GateOp::cnot(c1, c2),
        GateOp::new(GateKind::Cry(theta / 2.0), &[c1, t]),
    ]
}

pub fn decompose_swap(a: usize, b: usize) -> Vec<GateOp> {
    vec![GateOp::cnot(a, b), GateOp::cnot(b, a), GateOp::cnot(a, b)]
}

/// Rewrites one gate over {U1, U2, U3, CNOT}.
pub fn translate_op(op: &GateOp) -> Vec<GateOp> {
    let q = &op.qubits;
    let one = |k: GateKind| vec![GateOp::one(k, q[0])];
    match op.kind {
        GateKind::X => one(GateKind::U3(PI, 0.0, PI)),
        GateKind::H => one(GateKind::U2(0.0, PI)),
        GateKind::S => one(GateKind::U1(FRAC_PI_2)),
        GateKind::T => one(GateKind::U1(FRAC_PI_4)),
        GateKind::Tdg => one(GateKind::U1(-FRAC_PI_4)),
        GateKind::Ry(theta) => one(GateKind::U3(theta, 0.0, 0.0)),
        GateKind::U1(_) | GateKind::U2(..) | GateKind::U3(..) | GateKind::Cnot => vec![op.clone()],
        GateKind::Cry(theta) => translate(&decompose_cry(theta, q[0], q[1])),
        GateKind::Swap => decompose_swap(q[0], q[1]),
        GateKind::Ccnot => translate(&decompose_ccnot(q[0], q[1], q[2])),
        GateKind::Ccry(theta) => translate(&decompose_ccry(theta, q[0], q[1], q[2])),
    }
}

pub fn translate(ops: &[GateOp]) -> Vec<GateOp> {
    ops.iter().flat_map(translate_op).collect()
}

pub(crate) fn matrix2(kind: &GateKind) -> Matrix2<Complex64> {
    let m = crate::circuit::gate_matrix(kind);
    assert_eq!(m.nrows(), 2, "{} is not a single-qubit gate", kind.name());
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Wraps an angle into (-π, π].
pub(crate) fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// U3 angles and global phase `α` with `m = e^{iα} U3(θ, φ, λ)`, `θ ∈ [0, π]`.
pub(crate) fn u3_angles(m: &Matrix2<Complex64>) -> (f64, f64, f64, f64) {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    // Remove any overall scale so |c|² + |s|² = 1.
    let scale = det.norm().sqrt();
    let m = m.map(|z| z / scale);
    let c = m[(0, 0)].norm();
    let s = m[(1, 0)].norm();
    let theta = 2.0 * s.atan2(c);
    let (alpha, phi, lambda) = if s < 1e-14 {
        let alpha = m[(0, 0)].arg();
        (alpha, 0.0, m[(1, 1)].arg() - alpha)
    } else if c < 1e-14 {
        let alpha = m[(1, 0)].arg();
        (alpha, 0.0, (-m[(0, 1)]).arg() - alpha)
    } else {
        let alpha = m[(0, 0)].arg();
        (alpha, m[(1, 0)].arg() - alpha, (-m[(0, 1)]).arg() - alpha)
    };
    (theta, wrap(phi), wrap(lambda), alpha)
}

/// Collapses a run of single-qubit gates (in time order) into one `U3` and
/// the global phase it leaves behind.
pub fn resynthesize_1q(run: &[GateKind]) -> (GateKind, f64) {
    assert!(!run.is_empty(), "empty single-qubit run");
    let product = run
        .iter()
        .fold(Matrix2::identity(), |acc, k| matrix2(k) * acc);
    let (theta, phi, lambda, alpha) = u3_angles(&product);
    (GateKind::U3(theta, phi, lambda), alpha)
}

/// Cheapest basis gate for `U3(θ, φ, λ)`: nothing for identity, `U1` when
/// `θ = 0`, `U2` when `θ = π/2`.
pub(crate) fn simplify_u3(theta: f64, phi: f64, lambda: f64) -> Option<GateKind> {
    if theta.abs() < ANGLE_EPS {
        let l = wrap(phi + lambda);
        if l.abs() < ANGLE_EPS {
            None
        } else {
            Some(GateKind::U1(l))
        }
    } else if (theta - FRAC_PI_2).abs() < ANGLE_EPS {
        Some(GateKind::U2(phi, lambda))
    } else {
        Some(GateKind::U3(theta, phi, lambda))
    }
}

/// True when the gate is the identity up to global phase.
pub(crate) fn is_identity(kind: &GateKind) -> bool {
    let m = matrix2(kind);
    m[(0, 1)].norm() < ANGLE_EPS
        && m[(1, 0)].norm() < ANGLE_EPS
        && (m[(0, 0)] - m[(1, 1)]).norm() < ANGLE_EPS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_unitary, gate_matrix, unitaries_equivalent, QuantumCircuit};

    fn unitary_of(width: usize, ops: Vec<GateOp>) -> crate::circuit::Matrix {
        let c = QuantumCircuit::empty(width).with_ops(ops).unwrap();
        circuit_unitary(&c).unwrap()
    }

    #[test]
    fn cry_decomposition_is_exact() {
        for theta in [0.0, PI / 3.0, 1.234, -2.0, PI] {
            // Control on qubit 1 so the register index matches the gate's local basis.
            let u = unitary_of(2, translate(&decompose_cry(theta, 1, 0)));
            let v = gate_matrix(&GateKind::Cry(theta));
            assert!((&u - &v).norm() < 1e-12, "θ = {theta}");
            assert!(unitaries_equivalent(&u, &v, 1e-12).unwrap());
        }
    }

    #[test]
    fn cry_zero_is_identity() {
        let u = unitary_of(2, decompose_cry(0.0, 1, 0));
        assert!((u - crate::circuit::Matrix::identity(4, 4)).norm() < 1e-15);
    }

    #[test]
    fn ccnot_decomposition_up_to_phase() {
        let u = unitary_of(3, decompose_ccnot(2, 1, 0));
        let v = unitary_of(3, vec![GateOp::new(GateKind::Ccnot, &[2, 1, 0])]);
        assert!(unitaries_equivalent(&u, &v, 1e-10).unwrap());
        // |110> -> |111> with controls on qubits 2, 1.
        assert!((u[(0b111, 0b110)].norm() - 1.0).abs() < 1e-10);
        assert!((u[(0b010, 0b010)].norm() - 1.0).abs() < 1e-10);
        let d = decompose_ccnot(0, 1, 2);
        assert_eq!(d.iter().filter(|o| o.kind == GateKind::Cnot).count(), 6);
        assert_eq!(
            d.iter()
                .filter(|o| matches!(o.kind, GateKind::T | GateKind::Tdg))
                .count(),
            7
        );
        assert_eq!(d.iter().filter(|o| o.kind == GateKind::H).count(), 2);
    }

    #[test]
    fn ccry_decomposition_exact() {
        let u = unitary_of(3, translate(&decompose_ccry(0.9, 0, 1, 2)));
        let v = unitary_of(3, vec![GateOp::new(GateKind::Ccry(0.9), &[0, 1, 2])]);
        assert!(unitaries_equivalent(&u, &v, 1e-10).unwrap());
    }

    #[test]
    fn translation_preserves_every_gate() {
        let cases = [
            GateOp::one(GateKind::X, 0),
            GateOp::one(GateKind::H, 1),
            GateOp::one(GateKind::S, 0),
            GateOp::one(GateKind::T, 2),
            GateOp::one(GateKind::Tdg, 2),
            GateOp::one(GateKind::Ry(0.7), 1),
            GateOp::new(GateKind::Cry(-1.1), &[2, 0]),
            GateOp::new(GateKind::Swap, &[0, 2]),
            GateOp::new(GateKind::Ccnot, &[1, 2, 0]),
            GateOp::new(GateKind::Ccry(2.2), &[0, 2, 1]),
        ];
        for op in cases {
            let lowered = translate_op(&op);
            assert!(lowered.iter().all(|o| o.kind.is_basis()), "{}", op.kind);
            let u = unitary_of(3, lowered);
            let v = unitary_of(3, vec![op.clone()]);
            assert!(unitaries_equivalent(&u, &v, 1e-10).unwrap(), "{}", op.kind);
        }
    }

    #[test]
    fn resynthesis_examples() {
        let (g, _) = resynthesize_1q(&[GateKind::Ry(0.3), GateKind::Ry(0.5)]);
        let GateKind::U3(t, p, l) = g else { panic!() };
        assert!((t - 0.8).abs() < 1e-12 && p.abs() < 1e-12 && l.abs() < 1e-12);

        let (g, _) = resynthesize_1q(&[GateKind::X, GateKind::X]);
        let GateKind::U3(t, p, l) = g else { panic!() };
        assert!(t.abs() < 1e-12);
        assert!(simplify_u3(t, p, l).is_none());

        let (g, _) = resynthesize_1q(&[GateKind::H]);
        let GateKind::U3(t, p, l) = g else { panic!() };
        assert!((t - FRAC_PI_2).abs() < 1e-12);
        assert!(p.abs() < 1e-12 && (wrap(l) - PI).abs() < 1e-12);
    }

    #[test]
    fn resynthesis_phase_is_exact() {
        let run = [GateKind::H, GateKind::T, GateKind::Ry(0.4), GateKind::S];
        let (g, alpha) = resynthesize_1q(&run);
        let product = run
            .iter()
            .fold(Matrix2::identity(), |acc, k| matrix2(k) * acc);
        let rebuilt = matrix2(&g) * Complex64::from_polar(1.0, alpha);
        assert!((product - rebuilt).norm() < 1e-12);
    }

    #[test]
    fn simplification_picks_cheapest_gate() {
        assert_eq!(simplify_u3(0.0, 0.2, 0.3), Some(GateKind::U1(0.5)));
        assert_eq!(
            simplify_u3(FRAC_PI_2, 0.1, 0.2),
            Some(GateKind::U2(0.1, 0.2))
        );
        assert_eq!(simplify_u3(0.0, PI, PI), None);
        assert!(is_identity(&GateKind::U3(0.0, 1.0, -1.0)));
        assert!(!is_identity(&GateKind::U1(0.1)));
    }
}
