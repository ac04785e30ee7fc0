//! OpenQASM 2.0 subset: `qreg`, `creg`, `u1 u2 u3 cx ry cry x h s t tdg swap ccx`,
//! `measure`, and `barrier` (accepted and dropped).
//!
//! Qubit roles survive a round trip through `// role q[i] node k` and
//! `// role q[i] ancilla` comment lines, which other QASM consumers ignore.
//! Without role comments, measured qubits become nodes numbered by their
//! classical bit and everything else is an ancilla.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{CircuitError, GateKind, GateOp, QuantumCircuit, QubitRole};
use crate::bayesnet::NodeId;

pub fn to_qasm(c: &QuantumCircuit) -> Result<String, CircuitError> {
    if c.ops()
        .iter()
        .any(|op| matches!(op.kind, GateKind::Ccry(_)))
    {
        return Err(CircuitError::NotExportable);
    }
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    for (q, role) in c.roles().iter().enumerate() {
        match role {
            QubitRole::Node(id) => writeln!(out, "// role q[{q}] node {}", id.0).unwrap(),
            QubitRole::Ancilla => writeln!(out, "// role q[{q}] ancilla").unwrap(),
        }
    }
    writeln!(out, "qreg q[{}];", c.width()).unwrap();
    if !c.measured().is_empty() {
        writeln!(out, "creg c[{}];", c.measured().len()).unwrap();
    }
    for op in c.ops() {
        writeln!(out, "{op};").unwrap();
    }
    for (bit, q) in c.measured().iter().enumerate() {
        writeln!(out, "measure q[{q}] -> c[{bit}];").unwrap();
    }
    Ok(out)
}

pub fn from_qasm(text: &str) -> Result<QuantumCircuit, CircuitError> {
    let err = |line: usize, message: String| CircuitError::Qasm { line, message };

    let mut roles_from_comments: BTreeMap<usize, QubitRole> = BTreeMap::new();
    let mut code = String::new();
    let mut line_of_offset = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let (body, comment) = match raw.find("//") {
            Some(i) => (&raw[..i], Some(raw[i + 2..].trim())),
            None => (raw, None),
        };
        if let Some(rest) = comment.and_then(|c| c.strip_prefix("role ")) {
            let (q, role) =
                parse_role(rest).ok_or_else(|| err(line, format!("bad role comment {rest:?}")))?;
            roles_from_comments.insert(q, role);
        }
        for _ in 0..=body.len() {
            line_of_offset.push(line);
        }
        code.push_str(body);
        code.push('\n');
    }

    let mut qreg: Option<(String, usize)> = None;
    let mut creg: Option<String> = None;
    let mut ops = Vec::new();
    let mut measures: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0usize;
    for stmt in code.split(';') {
        let start = offset + (stmt.len() - stmt.trim_start().len());
        offset += stmt.len() + 1;
        let line = line_of_offset.get(start).copied().unwrap_or(0);
        let stmt = stmt.trim();
        if stmt.is_empty() {
            continue;
        }
        let (head, rest) = split_head(stmt);
        match head {
            "OPENQASM" => {
                if rest.trim() != "2.0" {
                    return Err(err(line, format!("unsupported version {}", rest.trim())));
                }
            }
            "include" => {}
            "qreg" => {
                if qreg.is_some() {
                    return Err(err(line, "only one qreg is supported".into()));
                }
                let (name, size) =
                    parse_indexed(rest).ok_or_else(|| err(line, format!("bad qreg {rest:?}")))?;
                qreg = Some((name, size));
            }
            "creg" => {
                let (name, _) =
                    parse_indexed(rest).ok_or_else(|| err(line, format!("bad creg {rest:?}")))?;
                creg = Some(name);
            }
            "barrier" => {}
            "measure" => {
                let (src, dst) = rest
                    .split_once("->")
                    .ok_or_else(|| err(line, "measure needs '->'".into()))?;
                let q = operand(src, &qreg).map_err(|m| err(line, m))?;
                let (cname, cbit) = parse_indexed(dst)
                    .ok_or_else(|| err(line, format!("bad classical bit {dst:?}")))?;
                if creg.as_deref() != Some(cname.as_str()) {
                    return Err(err(line, format!("unknown creg {cname:?}")));
                }
                measures.push((q, cbit));
            }
            _ => {
                let (name, params) = match head.split_once('(') {
                    Some((n, p)) => {
                        let p = p.strip_suffix(')').ok_or_else(|| {
                            err(line, format!("unbalanced parameters in {head:?}"))
                        })?;
                        let values = p
                            .split(',')
                            .map(|e| eval_expr(e).map_err(|m| err(line, m)))
                            .collect::<Result<Vec<_>, _>>()?;
                        (n, values)
                    }
                    None => (head, Vec::new()),
                };
                let kind = gate_kind(name, &params).map_err(|m| err(line, m))?;
                let qubits = rest
                    .split(',')
                    .map(|a| operand(a, &qreg))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|m| err(line, m))?;
                let width = qreg.as_ref().map(|q| q.1).unwrap_or(0);
                let op = GateOp::new(kind, &qubits);
                super::check_op(&op, width).map_err(|e| err(line, e.to_string()))?;
                ops.push(op);
            }
        }
    }

    let width = qreg.map(|q| q.1).unwrap_or(0);
    let mut roles = vec![QubitRole::Ancilla; width];
    let measured: BTreeSet<usize> = measures.iter().map(|m| m.0).collect();
    if roles_from_comments.is_empty() {
        for &(q, bit) in &measures {
            roles[q] = QubitRole::Node(NodeId(bit));
        }
    } else {
        for (q, role) in roles_from_comments {
            if q >= width {
                return Err(err(0, format!("role comment for q[{q}] outside register")));
            }
            roles[q] = role;
        }
    }
    QuantumCircuit::from_parts(width, ops, roles, measured)
}

fn parse_role(rest: &str) -> Option<(usize, QubitRole)> {
    let mut parts = rest.split_whitespace();
    let (_, q) = parse_indexed(parts.next()?)?;
    let role = match parts.next()? {
        "ancilla" => QubitRole::Ancilla,
        "node" => QubitRole::Node(NodeId(parts.next()?.parse().ok()?)),
        _ => return None,
    };
    Some((q, role))
}

fn split_head(stmt: &str) -> (&str, &str) {
    // The head runs to the first whitespace outside parentheses.
    let mut depth = 0i32;
    for (i, ch) in stmt.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c.is_whitespace() && depth == 0 => return (&stmt[..i], stmt[i..].trim()),
            _ => {}
        }
    }
    (stmt, "")
}

fn parse_indexed(s: &str) -> Option<(String, usize)> {
    let s = s.trim();
    let open = s.find('[')?;
    let close = s.strip_suffix(']')?;
    let idx = close[open + 1..].trim().parse().ok()?;
    Some((s[..open].trim().to_string(), idx))
}

fn operand(s: &str, qreg: &Option<(String, usize)>) -> Result<usize, String> {
    let (name, idx) = parse_indexed(s).ok_or_else(|| format!("bad operand {:?}", s.trim()))?;
    match qreg {
        Some((q, _)) if *q == name => Ok(idx),
        _ => Err(format!("unknown register {name:?}")),
    }
}

fn gate_kind(name: &str, p: &[f64]) -> Result<GateKind, String> {
    let want = |n: usize| {
        if p.len() == n {
            Ok(())
        } else {
            Err(format!("{name} takes {n} parameters, got {}", p.len()))
        }
    };
    let kind = match name {
        "x" => want(0).map(|_| GateKind::X)?,
        "h" => want(0).map(|_| GateKind::H)?,
        "s" => want(0).map(|_| GateKind::S)?,
        "t" => want(0).map(|_| GateKind::T)?,
        "tdg" => want(0).map(|_| GateKind::Tdg)?,
        "cx" | "CX" => want(0).map(|_| GateKind::Cnot)?,
        "swap" => want(0).map(|_| GateKind::Swap)?,
        "ccx" => want(0).map(|_| GateKind::Ccnot)?,
        "u1" => want(1).map(|_| GateKind::U1(p[0]))?,
        "u2" => want(2).map(|_| GateKind::U2(p[0], p[1]))?,
        "u3" | "U" => want(3).map(|_| GateKind::U3(p[0], p[1], p[2]))?,
        "ry" => want(1).map(|_| GateKind::Ry(p[0]))?,
        "cry" => want(1).map(|_| GateKind::Cry(p[0]))?,
        other => return Err(format!("unsupported gate {other:?}")),
    };
    Ok(kind)
}

/// Evaluates `+ - * /`, parentheses, unary minus, numbers and `pi`.
fn eval_expr(src: &str) -> Result<f64, String> {
    struct P<'a> {
        s: &'a [u8],
        i: usize,
    }
    impl P<'_> {
        fn ws(&mut self) {
            while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
                self.i += 1;
            }
        }
        fn peek(&mut self) -> Option<u8> {
            self.ws();
            self.s.get(self.i).copied()
        }
        fn expr(&mut self) -> Result<f64, String> {
            let mut v = self.term()?;
            while let Some(op @ (b'+' | b'-')) = self.peek() {
                self.i += 1;
                let r = self.term()?;
                v = if op == b'+' { v + r } else { v - r };
            }
            Ok(v)
        }
        fn term(&mut self) -> Result<f64, String> {
            let mut v = self.unary()?;
            while let Some(op @ (b'*' | b'/')) = self.peek() {
                self.i += 1;
                let r = self.unary()?;
                v = if op == b'*' { v * r } else { v / r };
            }
            Ok(v)
        }
        fn unary(&mut self) -> Result<f64, String> {
            match self.peek() {
                Some(b'-') => {
                    self.i += 1;
                    Ok(-self.unary()?)
                }
                Some(b'+') => {
                    self.i += 1;
                    self.unary()
                }
                _ => self.primary(),
            }
        }
        fn primary(&mut self) -> Result<f64, String> {
            match self.peek() {
                Some(b'(') => {
                    self.i += 1;
                    let v = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err("expected ')'".into());
                    }
                    self.i += 1;
                    Ok(v)
                }
                Some(b'p') if self.s[self.i..].starts_with(b"pi") => {
                    self.i += 2;
                    Ok(PI)
                }
                Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
                    let start = self.i;
                    while self.i < self.s.len() {
                        let ch = self.s[self.i];
                        let exp_sign =
                            (ch == b'-' || ch == b'+') && matches!(self.s[self.i - 1], b'e' | b'E');
                        if ch.is_ascii_digit() || ch == b'.' || ch == b'e' || ch == b'E' || exp_sign
                        {
                            self.i += 1;
                        } else {
                            break;
                        }
                    }
                    let lit = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                    lit.parse().map_err(|_| format!("bad number {lit:?}"))
                }
                _ => Err("expected a number, 'pi' or '('".into()),
            }
        }
    }
    let mut p = P {
        s: src.as_bytes(),
        i: 0,
    };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err(format!("trailing input in {:?}", src.trim()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    fn sample() -> QuantumCircuit {
        let mut b = CircuitBuilder::new(3);
        b.push(GateKind::Ry(1.0471975511965976), &[0]).unwrap();
        b.push(GateKind::X, &[0]).unwrap();
        b.push(GateKind::Cry(-0.25), &[0, 1]).unwrap();
        b.push(GateKind::Ccnot, &[0, 1, 2]).unwrap();
        b.push(GateKind::U3(0.1, 2.0, -3.0), &[2]).unwrap();
        b.push(GateKind::U2(1e-17, 0.5), &[1]).unwrap();
        b.push(GateKind::Tdg, &[1]).unwrap();
        b.role(0, QubitRole::Node(NodeId(0)))
            .role(1, QubitRole::Node(NodeId(1)))
            .measure(0)
            .measure(1);
        b.build().unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let text = to_qasm(&c).unwrap();
        assert_eq!(from_qasm(&text).unwrap(), c);
    }

    #[test]
    fn ccry_is_not_exportable() {
        let mut b = CircuitBuilder::new(3);
        b.push(GateKind::Ccry(0.3), &[0, 1, 2]).unwrap();
        assert_eq!(
            to_qasm(&b.build().unwrap()),
            Err(CircuitError::NotExportable)
        );
    }

    #[test]
    fn parses_expressions_and_foreign_layout() {
        let text = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg r[2];\ncreg m[1];\n\
                    u3(pi/2, -pi, 2*pi/4) r[1];\nbarrier r[0],r[1];\ncx r[1],r[0];\nmeasure r[1] -> m[0];\n";
        let c = from_qasm(text).unwrap();
        assert_eq!(c.ops().len(), 2);
        assert_eq!(c.ops()[0].kind, GateKind::U3(PI / 2.0, -PI, PI / 2.0));
        assert_eq!(c.roles()[1], QubitRole::Node(NodeId(0)));
        assert_eq!(c.roles()[0], QubitRole::Ancilla);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "OPENQASM 2.0;\nqreg q[2];\n\nfoo q[0];\n";
        match from_qasm(text) {
            Err(CircuitError::Qasm { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("foo"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = "OPENQASM 2.0;\nqreg q[2];\ncx q[0],q[2];\n";
        assert!(matches!(
            from_qasm(text),
            Err(CircuitError::Qasm { line: 3, .. })
        ));
    }

    #[test]
    fn expression_evaluator() {
        assert_eq!(eval_expr("-(1+2)*3").unwrap(), -9.0);
        assert_eq!(eval_expr("1e-3").unwrap(), 1e-3);
        assert_eq!(eval_expr("2.5e+2 / 5").unwrap(), 50.0);
        assert!(eval_expr("1 +").is_err());
        assert!(eval_expr("2 pi").is_err());
    }
}
