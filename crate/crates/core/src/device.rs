//! Device models: coupling topology plus calibration error rates.
//!
//! Calibration documents are JSON:
//!
//! ```json
//! {"name": "athens", "n_qubits": 5,
//!  "coupling": [[0,1],[1,2],[2,3],[3,4]],
//!  "u2_error": {"0": 0.0005, ...},
//!  "cnot_error": {"0-1": 0.01, ...},
//!  "readout_error": {"0": 0.02, ...},
//!  "calibrated_at": "2020-06-01T00:00:00Z"}
//! ```
//!
//! Coupling is undirected. Qubits missing from a rate table get rate 0.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Uniform single-qubit (U2) error of catalog devices.
pub const DEFAULT_U2_ERROR: f64 = 5e-4;
/// Uniform CNOT error of catalog devices.
pub const DEFAULT_CNOT_ERROR: f64 = 1e-2;
/// Uniform readout error of catalog devices.
pub const DEFAULT_READOUT_ERROR: f64 = 2e-2;
/// `calibrated_at` stamp of the built-in representative rates.
pub const REPRESENTATIVE_CALIBRATION: &str = "representative-defaults";

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("malformed calibration document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("device {0:?} has no qubits")]
    Empty(String),
    #[error("coupling edge ({0},{1}) references a qubit outside the device")]
    EdgeOutOfRange(usize, usize),
    #[error("coupling edge ({0},{0}) is a self-loop")]
    SelfLoop(usize),
    #[error("coupling graph is disconnected")]
    Disconnected,
    #[error("{what} rate {rate} is outside [0,1]")]
    RateOutOfRange { what: String, rate: f64 },
    #[error("cnot_error given for ({0},{1}), which is not a coupling edge")]
    CnotOnNonEdge(usize, usize),
    #[error("{table} entry for qubit {qubit} is outside the device")]
    QubitOutOfRange { table: &'static str, qubit: usize },
    #[error("bad cnot_error key {0:?}; expected \"a-b\"")]
    BadEdgeKey(String),
    #[error("unknown device {0:?}")]
    Unknown(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct DeviceDoc {
    name: String,
    n_qubits: usize,
    coupling: Vec<[usize; 2]>,
    #[serde(default)]
    u2_error: BTreeMap<usize, f64>,
    #[serde(default)]
    cnot_error: BTreeMap<String, f64>,
    #[serde(default)]
    readout_error: BTreeMap<usize, f64>,
    #[serde(default)]
    calibrated_at: String,
}

/// Normalised undirected edge, smaller index first.
pub fn edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    name: String,
    n_qubits: usize,
    coupling: BTreeSet<(usize, usize)>,
    u2_error: Vec<f64>,
    cnot_error: BTreeMap<(usize, usize), f64>,
    readout_error: Vec<f64>,
    calibrated_at: String,
}

impl DeviceModel {
    /// Device with uniform rates on every qubit and edge.
    pub fn uniform(
        name: &str,
        n_qubits: usize,
        edges: &[(usize, usize)],
        u2: f64,
        cnot: f64,
        readout: f64,
    ) -> Result<Self, DeviceError> {
        let coupling: BTreeSet<_> = edges.iter().map(|&(a, b)| edge(a, b)).collect();
        let d = Self {
            name: name.to_string(),
            n_qubits,
            cnot_error: coupling.iter().map(|&e| (e, cnot)).collect(),
            coupling,
            u2_error: vec![u2; n_qubits],
            readout_error: vec![readout; n_qubits],
            calibrated_at: REPRESENTATIVE_CALIBRATION.to_string(),
        };
        d.check()?;
        Ok(d)
    }

    /// All-to-all coupling.
    pub fn fully_connected(name: &str, n_qubits: usize, u2: f64, cnot: f64, readout: f64) -> Self {
        let edges: Vec<_> = (0..n_qubits)
            .flat_map(|a| (a + 1..n_qubits).map(move |b| (a, b)))
            .collect();
        Self::uniform(name, n_qubits, &edges, u2, cnot, readout).expect("complete graph is valid")
    }

    fn check(&self) -> Result<(), DeviceError> {
        if self.n_qubits == 0 {
            return Err(DeviceError::Empty(self.name.clone()));
        }
        for &(a, b) in &self.coupling {
            if a == b {
                return Err(DeviceError::SelfLoop(a));
            }
            if b >= self.n_qubits {
                return Err(DeviceError::EdgeOutOfRange(a, b));
            }
        }
        let rate = |what: String, r: f64| {
            if r.is_finite() && (0.0..=1.0).contains(&r) {
                Ok(())
            } else {
                Err(DeviceError::RateOutOfRange { what, rate: r })
            }
        };
        for (q, &r) in self.u2_error.iter().enumerate() {
            rate(format!("u2_error[{q}]"), r)?;
        }
        for (q, &r) in self.readout_error.iter().enumerate() {
            rate(format!("readout_error[{q}]"), r)?;
        }
        for (&(a, b), &r) in &self.cnot_error {
            if !self.coupling.contains(&(a, b)) {
                return Err(DeviceError::CnotOnNonEdge(a, b));
            }
            rate(format!("cnot_error[{a}-{b}]"), r)?;
        }
        if !self.is_connected() {
            return Err(DeviceError::Disconnected);
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coupling(&self) -> &BTreeSet<(usize, usize)> {
        &self.coupling
    }

    pub fn calibrated_at(&self) -> &str {
        &self.calibrated_at
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.coupling.contains(&edge(a, b))
    }

    pub fn u2_error(&self, q: usize) -> f64 {
        self.u2_error[q]
    }

    pub fn readout_error(&self, q: usize) -> f64 {
        self.readout_error[q]
    }

    /// CNOT error on the edge `a-b`, or `None` if they are not coupled.
    pub fn cnot_error(&self, a: usize, b: usize) -> Option<f64> {
        let e = edge(a, b);
        if self.coupling.contains(&e) {
            Some(self.cnot_error.get(&e).copied().unwrap_or(0.0))
        } else {
            None
        }
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        self.coupling
            .iter()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(|d| d.is_some())
    }

    fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_qubits];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(q) = queue.pop_front() {
            let d = dist[q].unwrap();
            for n in self.neighbors(q) {
                if dist[n].is_none() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// All-pairs hop distances over the coupling graph.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        (0..self.n_qubits)
            .map(|q| {
                self.bfs(q)
                    .into_iter()
                    .map(|d| d.unwrap_or(usize::MAX))
                    .collect()
            })
            .collect()
    }

    /// Shortest path from `a` to `b`; among equal-length paths the one whose
    /// successive hops have the lowest indices wins.
    pub fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let to_b = self.bfs(b);
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let here = to_b[cur].expect("connected device");
            cur = self
                .neighbors(cur)
                .into_iter()
                .filter(|&n| to_b[n] == Some(here - 1))
                .min()
                .expect("a neighbour one hop closer exists");
            path.push(cur);
        }
        path
    }

    /// Same topology with every rate set to zero.
    pub fn noiseless(&self) -> Self {
        self.scaled(0.0)
    }

    /// Every rate multiplied by `factor`, clamped to 1.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |r: f64| (r * factor).min(1.0);
        Self {
            u2_error: self.u2_error.iter().map(|&r| s(r)).collect(),
            cnot_error: self.cnot_error.iter().map(|(&e, &r)| (e, s(r))).collect(),
            readout_error: self.readout_error.iter().map(|&r| s(r)).collect(),
            ..self.clone()
        }
    }

    pub fn with_cnot_error(mut self, a: usize, b: usize, rate: f64) -> Result<Self, DeviceError> {
        let e = edge(a, b);
        if !self.coupling.contains(&e) {
            return Err(DeviceError::CnotOnNonEdge(e.0, e.1));
        }
        self.cnot_error.insert(e, rate);
        self.check()?;
        Ok(self)
    }

    pub fn with_u2_error(mut self, q: usize, rate: f64) -> Result<Self, DeviceError> {
        if q >= self.n_qubits {
            return Err(DeviceError::QubitOutOfRange {
                table: "u2_error",
                qubit: q,
            });
        }
        self.u2_error[q] = rate;
        self.check()?;
        Ok(self)
    }

    pub fn with_readout_error(mut self, q: usize, rate: f64) -> Result<Self, DeviceError> {
        if q >= self.n_qubits {
            return Err(DeviceError::QubitOutOfRange {
                table: "readout_error",
                qubit: q,
            });
        }
        self.readout_error[q] = rate;
        self.check()?;
        Ok(self)
    }

    /// Parses and validates a calibration document.
    pub fn from_json(text: &str) -> Result<Self, DeviceError> {
        let doc: DeviceDoc = serde_json::from_str(text)?;
        let n = doc.n_qubits;
        let mut cnot_error = BTreeMap::new();
        for (key, &rate) in &doc.cnot_error {
            let (a, b) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| DeviceError::BadEdgeKey(key.clone()))?;
            cnot_error.insert(edge(a, b), rate);
        }
        let dense = |table: &'static str, m: &BTreeMap<usize, f64>| {
            let mut v = vec![0.0; n];
            for (&q, &r) in m {
                if q >= n {
                    return Err(DeviceError::QubitOutOfRange { table, qubit: q });
                }
                v[q] = r;
            }
            Ok(v)
        };
        let d = Self {
            u2_error: dense("u2_error", &doc.u2_error)?,
            readout_error: dense("readout_error", &doc.readout_error)?,
            coupling: doc.coupling.iter().map(|&[a, b]| edge(a, b)).collect(),
            cnot_error,
            name: doc.name,
            n_qubits: n,
            calibrated_at: doc.calibrated_at,
        };
        d.check()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        let doc = DeviceDoc {
            name: self.name.clone(),
            n_qubits: self.n_qubits,
            coupling: self.coupling.iter().map(|&(a, b)| [a, b]).collect(),
            u2_error: self.u2_error.iter().copied().enumerate().collect(),
            cnot_error: self
                .coupling
                .iter()
                .map(|&(a, b)| (format!("{a}-{b}"), self.cnot_error(a, b).unwrap()))
                .collect(),
            readout_error: self.readout_error.iter().copied().enumerate().collect(),
            calibrated_at: self.calibrated_at.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("device document serialises")
    }

    /// Hex SHA-256 of the canonical calibration document.
    pub fn calibration_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

pub fn load_device(text: &str) -> Result<DeviceModel, DeviceError> {
    DeviceModel::from_json(text)
}

const T_SHAPE: &[(usize, usize)] = &[(0, 1), (1, 2), (1, 3), (3, 4)];
const LINE: &[(usize, usize)] = &[(0, 1), (1, 2), (2, 3), (3, 4)];
const BOW_TIE: &[(usize, usize)] = &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)];
/// 15-qubit ladder: rows 0..=6 and 14..=8 joined by rungs, with qubit 7
/// hanging off the end of the lower row at 8 (and 6-8 closing the box).
const MELBOURNE: &[(usize, usize)] = &[
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (5, 6),
    (7, 8),
    (8, 9),
    (9, 10),
    (10, 11),
    (11, 12),
    (12, 13),
    (13, 14),
    (0, 14),
    (1, 13),
    (2, 12),
    (3, 11),
    (4, 10),
    (5, 9),
    (6, 8),
];

/// The nine catalog devices with representative uniform rates.
pub fn builtin_catalog() -> Vec<DeviceModel> {
    let mk = |name: &str, n: usize, edges: &[(usize, usize)]| {
        DeviceModel::uniform(
            name,
            n,
            edges,
            DEFAULT_U2_ERROR,
            DEFAULT_CNOT_ERROR,
            DEFAULT_READOUT_ERROR,
        )
        .expect("catalog topology is valid")
    };
    vec![
        mk("burlington", 5, T_SHAPE),
        mk("ourense", 5, T_SHAPE),
        mk("vigo", 5, T_SHAPE),
        mk("essex", 5, T_SHAPE),
        mk("london", 5, T_SHAPE),
        mk("rome", 5, LINE),
        mk("athens", 5, LINE),
        mk("yorktown", 5, BOW_TIE),
        mk("melbourne", 15, MELBOURNE),
    ]
}

/// Catalog lookup by case-insensitive name.
pub fn catalog_device(name: &str) -> Result<DeviceModel, DeviceError> {
    builtin_catalog()
        .into_iter()
        .find(|d| d.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| DeviceError::Unknown(name.to_string()))
}
