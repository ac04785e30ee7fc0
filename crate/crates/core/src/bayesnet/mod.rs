//! Discrete binary Bayesian networks and exact inference by enumeration.
//!
//! A network is a list of nodes indexed densely by [`NodeId`]. Each node owns a
//! conditional probability table whose rows are keyed by the joint value of its
//! parents, with the *first* declared parent as the most significant bit of the
//! row index. Exact marginals are obtained by summing the factorised joint over
//! all `2^s` assignments, which is what the rest of the crate treats as ground
//! truth.

mod json;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use json::{from_json, to_json, LoadIssue};

/// Tolerance on `p0 + p1 = 1` for every CPT row.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of nodes accepted by exact enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Dense index of a node within its network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Conditional probability table of a binary node.
///
/// `rows[k] = (P(v=0 | parents=k), P(v=1 | parents=k))`, where bit
/// `parents.len() - 1 - j` of `k` holds the value of `parents[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    parents: Vec<NodeId>,
    rows: Vec<(f64, f64)>,
}

impl Cpt {
    /// Builds a table without checking it; use [`BayesianNetwork::validate`].
    pub fn new(parents: Vec<NodeId>, rows: Vec<(f64, f64)>) -> Self {
        Self { parents, rows }
    }

    /// Single-row table of a root node.
    pub fn root(p0: f64) -> Self {
        Self::new(Vec::new(), vec![(p0, 1.0 - p0)])
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    /// Row index for the given parent values, in `parents` order.
    pub fn row_index(&self, parent_values: &[u8]) -> usize {
        parent_values
            .iter()
            .fold(0usize, |acc, &v| (acc << 1) | usize::from(v & 1))
    }

    /// Parent values of row `row`, in `parents` order.
    pub fn row_assignment(&self, row: usize) -> Vec<u8> {
        let k = self.parents.len();
        (0..k).map(|j| ((row >> (k - 1 - j)) & 1) as u8).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub cpt: Cpt,
}

/// One broken invariant found by [`BayesianNetwork::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateName {
        node: NodeId,
        name: String,
    },
    UnknownParent {
        node: NodeId,
        parent: NodeId,
    },
    SelfParent {
        node: NodeId,
    },
    DuplicateParent {
        node: NodeId,
        parent: NodeId,
    },
    RowCount {
        node: NodeId,
        expected: usize,
        found: usize,
    },
    NonFinite {
        node: NodeId,
        row: usize,
    },
    OutOfRange {
        node: NodeId,
        row: usize,
        value: f64,
    },
    RowSum {
        node: NodeId,
        row: usize,
        sum: f64,
    },
    Cycle {
        nodes: Vec<NodeId>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateName { node, name } => {
                write!(f, "node {node}: duplicate name {name:?}")
            }
            Violation::UnknownParent { node, parent } => {
                write!(f, "node {node}: parent {parent} does not exist")
            }
            Violation::SelfParent { node } => write!(f, "node {node}: lists itself as a parent"),
            Violation::DuplicateParent { node, parent } => {
                write!(f, "node {node}: parent {parent} listed twice")
            }
            Violation::RowCount {
                node,
                expected,
                found,
            } => {
                write!(
                    f,
                    "node {node}: expected {expected} cpt rows, found {found}"
                )
            }
            Violation::NonFinite { node, row } => {
                write!(f, "node {node} row {row}: non-finite probability")
            }
            Violation::OutOfRange { node, row, value } => {
                write!(
                    f,
                    "node {node} row {row}: probability {value} outside [0,1]"
                )
            }
            Violation::RowSum { node, row, sum } => {
                write!(f, "node {node} row {row}: row sum ≠ 1 (got {sum})")
            }
            Violation::Cycle { nodes } => {
                let list: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
                write!(f, "directed cycle through nodes {}", list.join(", "))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum BnError {
    #[error("assignment is missing node {0}")]
    MissingAssignment(NodeId),
    #[error("assignment gives node {node} the value {value}; nodes are binary")]
    InvalidValue { node: NodeId, value: u8 },
    #[error("network has {nodes} nodes, enumeration cap is {cap}")]
    TooLarge { nodes: usize, cap: usize },
    #[error("invalid network: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("invalid network document: {}", join_issues(.0))]
    Load(Vec<LoadIssue>),
    #[error("malformed network document: {0}")]
    Parse(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn join_issues(v: &[LoadIssue]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Directed acyclic graph of binary nodes with their CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianNetwork {
    nodes: Vec<Node>,
}

impl BayesianNetwork {
    /// Assigns `NodeId(i)` to the i-th entry. No invariant is checked here.
    pub fn new(nodes: Vec<(String, Cpt)>) -> Self {
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, (name, cpt))| Node {
                id: NodeId(i),
                name,
                cpt,
            })
            .collect();
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.name == name).map(|n| n.id)
    }

    /// Checks every structural and numeric invariant and reports all failures.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let s = self.nodes.len();
        let mut seen_names: BTreeMap<&str, NodeId> = BTreeMap::new();
        for node in &self.nodes {
            if seen_names.insert(node.name.as_str(), node.id).is_some() {
                out.push(Violation::DuplicateName {
                    node: node.id,
                    name: node.name.clone(),
                });
            }
            let parents = node.cpt.parents();
            for (j, &p) in parents.iter().enumerate() {
                if p.0 >= s {
                    out.push(Violation::UnknownParent {
                        node: node.id,
                        parent: p,
                    });
                } else if p == node.id {
                    out.push(Violation::SelfParent { node: node.id });
                }
                if parents[..j].contains(&p) {
                    out.push(Violation::DuplicateParent {
                        node: node.id,
                        parent: p,
                    });
                }
            }
            let expected = 1usize << parents.len().min(usize::BITS as usize - 1);
            if node.cpt.rows().len() != expected {
                out.push(Violation::RowCount {
                    node: node.id,
                    expected,
                    found: node.cpt.rows().len(),
                });
            }
            for (r, &(p0, p1)) in node.cpt.rows().iter().enumerate() {
                if !p0.is_finite() || !p1.is_finite() {
                    out.push(Violation::NonFinite {
                        node: node.id,
                        row: r,
                    });
                    continue;
                }
                for v in [p0, p1] {
                    if !(0.0..=1.0).contains(&v) {
                        out.push(Violation::OutOfRange {
                            node: node.id,
                            row: r,
                            value: v,
                        });
                    }
                }
                if (p0 + p1 - 1.0).abs() > ROW_SUM_TOLERANCE {
                    out.push(Violation::RowSum {
                        node: node.id,
                        row: r,
                        sum: p0 + p1,
                    });
                }
            }
        }
        let ordered = self.kahn_order();
        if ordered.len() < s {
            let mut stuck: Vec<NodeId> = (0..s)
                .map(NodeId)
                .filter(|id| !ordered.contains(id))
                .collect();
            stuck.sort();
            out.push(Violation::Cycle { nodes: stuck });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Kahn's algorithm over valid parent references; cyclic nodes are left out.
    fn kahn_order(&self) -> Vec<NodeId> {
        let s = self.nodes.len();
        let valid = |p: &NodeId| p.0 < s;
        let mut indegree: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| n.cpt.parents().iter().filter(|p| valid(p)).count())
            .collect();
        let mut ready: Vec<NodeId> = (0..s).filter(|&i| indegree[i] == 0).map(NodeId).collect();
        let mut order = Vec::with_capacity(s);
        while let Some(pos) = ready
            .iter()
            .enumerate()
            .min_by_key(|(_, id)| **id)
            .map(|(i, _)| i)
        {
            let id = ready.swap_remove(pos);
            order.push(id);
            for child in &self.nodes {
                for p in child.cpt.parents().iter().filter(|p| valid(p)) {
                    if *p == id {
                        indegree[child.id.0] -= 1;
                        if indegree[child.id.0] == 0 {
                            ready.push(child.id);
                        }
                    }
                }
            }
        }
        order
    }

    /// Depth of each node: 0 for roots, one more than the deepest parent.
    ///
    /// Only meaningful for acyclic networks.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.nodes.len()];
        for id in self.kahn_order() {
            let d = self
                .node(id)
                .cpt
                .parents()
                .iter()
                .map(|p| depth[p.0] + 1)
                .max()
                .unwrap_or(0);
            depth[id.0] = d;
        }
        depth
    }

    /// Topological order layered by depth: all roots first, then their
    /// children, and so on. Ties are broken by `NodeId`.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let depth = self.depths();
        let mut order: Vec<NodeId> = self.kahn_order();
        order.sort_by_key(|id| (depth[id.0], *id));
        order
    }

    /// `P(v | parents)` for the node, reading parent values from `bits`
    /// (bit `i` is the value of `NodeId(i)`).
    fn conditional(&self, node: &Node, bits: u64) -> f64 {
        let row = node
            .cpt
            .parents()
            .iter()
            .fold(0usize, |acc, p| (acc << 1) | ((bits >> p.0) & 1) as usize);
        let (p0, p1) = node.cpt.rows()[row];
        if (bits >> node.id.0) & 1 == 0 {
            p0
        } else {
            p1
        }
    }

    /// Joint probability of a full assignment packed as bits (bit `i` is node `i`).
    pub fn joint_probability_bits(&self, bits: u64) -> f64 {
        self.nodes
            .iter()
            .map(|n| self.conditional(n, bits))
            .product()
    }

    /// Product of the CPT lookups for a full assignment.
    pub fn joint_probability(&self, assignment: &BTreeMap<NodeId, u8>) -> Result<f64, BnError> {
        let mut bits = 0u64;
        for node in &self.nodes {
            let v = *assignment
                .get(&node.id)
                .ok_or(BnError::MissingAssignment(node.id))?;
            if v > 1 {
                return Err(BnError::InvalidValue {
                    node: node.id,
                    value: v,
                });
            }
            bits |= u64::from(v) << node.id.0;
        }
        Ok(self.joint_probability_bits(bits))
    }

    /// Full joint table indexed by packed assignment bits.
    pub fn joint_distribution(&self, cap: usize) -> Result<Vec<f64>, BnError> {
        let s = self.nodes.len();
        if s > cap || s >= 63 {
            return Err(BnError::TooLarge { nodes: s, cap });
        }
        Ok((0..1u64 << s)
            .map(|b| self.joint_probability_bits(b))
            .collect())
    }

    /// `P(node = 0)` for every node, by exhaustive enumeration.
    pub fn exact_marginals(&self) -> Result<Vec<f64>, BnError> {
        self.exact_marginals_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn exact_marginals_with_cap(&self, cap: usize) -> Result<Vec<f64>, BnError> {
        let joint = self.joint_distribution(cap)?;
        let s = self.nodes.len();
        let mut zero = vec![0.0; s];
        for (bits, p) in joint.iter().enumerate() {
            for (i, acc) in zero.iter_mut().enumerate() {
                if (bits >> i) & 1 == 0 {
                    *acc += p;
                }
            }
        }
        Ok(zero)
    }
}

/// Four-node oil-company stock prediction network (IR, OI → SM, SP).
///
/// Interest rate (IR) and oil industry (OI) are roots; stock market (SM)
/// depends on IR; stock price (SP) depends on OI and SM. Its exact marginals
/// are P(·=0) = 0.750, 0.600, 0.425, 0.499.
pub fn stock_network() -> BayesianNetwork {
    let ir = NodeId(0);
    let oi = NodeId(1);
    let sm = NodeId(2);
    BayesianNetwork::new(vec![
        ("IR".into(), Cpt::root(0.75)),
        ("OI".into(), Cpt::root(0.6)),
        (
            "SM".into(),
            Cpt::new(vec![ir], vec![(0.3, 0.7), (0.8, 0.2)]),
        ),
        (
            "SP".into(),
            Cpt::new(
                vec![oi, sm],
                vec![(0.9, 0.1), (0.5, 0.5), (0.3, 0.7), (0.2, 0.8)],
            ),
        ),
    ])
}

/// Two-node network A → B with P(A=0)=0.6, P(B=0|A=0)=0.7, P(B=0|A=1)=0.2.
pub fn two_node_network() -> BayesianNetwork {
    BayesianNetwork::new(vec![
        ("A".into(), Cpt::root(0.6)),
        (
            "B".into(),
            Cpt::new(vec![NodeId(0)], vec![(0.7, 0.3), (0.2, 0.8)]),
        ),
    ])
}
