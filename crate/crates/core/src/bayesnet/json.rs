//! JSON network documents.
//!
//! ```json
//! {"nodes": [
//!   {"name": "A", "parents": [], "cpt": [{"given": {}, "p0": 0.6, "p1": 0.4}]},
//!   {"name": "B", "parents": ["A"], "cpt": [
//!     {"given": {"A": 0}, "p0": 0.7, "p1": 0.3},
//!     {"given": {"A": 1}, "p0": 0.2, "p1": 0.8}]}
//! ]}
//! ```
//!
//! The loader renumbers nodes in depth-layered topological order (declaration
//! order breaks ties), so `NodeId`s in the loaded network need not match the
//! position in the document.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BayesianNetwork, BnError, Cpt, NodeId, ROW_SUM_TOLERANCE};

#[derive(Debug, Serialize, Deserialize)]
struct NetworkDoc {
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    name: String,
    #[serde(default)]
    parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<u32>,
    cpt: Vec<RowDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RowDoc {
    #[serde(default)]
    given: BTreeMap<String, u8>,
    p0: f64,
    p1: f64,
}

/// A single problem in a network document, located by a JSON-path-like string.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for LoadIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn issue(path: String, message: impl Into<String>) -> LoadIssue {
    LoadIssue {
        path,
        message: message.into(),
    }
}

/// Parses and validates a network document, reporting every problem found.
pub fn from_json(text: &str) -> Result<BayesianNetwork, BnError> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    let mut issues = Vec::new();

    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, node) in doc.nodes.iter().enumerate() {
        if index.insert(node.name.as_str(), i).is_some() {
            issues.push(issue(
                format!("nodes[{i}].name"),
                format!("duplicate name {:?}", node.name),
            ));
        }
    }

    for (i, node) in doc.nodes.iter().enumerate() {
        if let Some(states) = node.states {
            if states != 2 {
                issues.push(issue(
                    format!("nodes[{i}].states"),
                    format!("only binary nodes are supported, got {states} states"),
                ));
            }
        }
        let mut seen = BTreeSet::new();
        for (j, p) in node.parents.iter().enumerate() {
            if !index.contains_key(p.as_str()) {
                issues.push(issue(
                    format!("nodes[{i}].parents[{j}]"),
                    format!("unknown node {p:?}"),
                ));
            }
            if p == &node.name {
                issues.push(issue(
                    format!("nodes[{i}].parents[{j}]"),
                    "node lists itself as parent",
                ));
            }
            if !seen.insert(p.as_str()) {
                issues.push(issue(
                    format!("nodes[{i}].parents[{j}]"),
                    format!("duplicate parent {p:?}"),
                ));
            }
        }

        let k = node.parents.len();
        let expected = 1usize << k.min(30);
        let mut covered = BTreeSet::new();
        for (r, row) in node.cpt.iter().enumerate() {
            let path = format!("nodes[{i}].cpt[{r}]");
            let mut ok_key = true;
            for (name, v) in &row.given {
                if !node.parents.contains(name) {
                    issues.push(issue(
                        format!("{path}.given.{name}"),
                        "not a parent of this node",
                    ));
                    ok_key = false;
                }
                if *v > 1 {
                    issues.push(issue(
                        format!("{path}.given.{name}"),
                        format!("value {v} is not 0 or 1"),
                    ));
                    ok_key = false;
                }
            }
            for p in &node.parents {
                if !row.given.contains_key(p) {
                    issues.push(issue(
                        format!("{path}.given"),
                        format!("missing parent {p:?}"),
                    ));
                    ok_key = false;
                }
            }
            if ok_key {
                let key: Vec<u8> = node.parents.iter().map(|p| row.given[p]).collect();
                if !covered.insert(key) {
                    issues.push(issue(
                        format!("{path}.given"),
                        "duplicate parent assignment",
                    ));
                }
            }
            for (field, v) in [("p0", row.p0), ("p1", row.p1)] {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    issues.push(issue(
                        format!("{path}.{field}"),
                        format!("probability {v} outside [0,1]"),
                    ));
                }
            }
            if (row.p0 + row.p1 - 1.0).abs() > ROW_SUM_TOLERANCE {
                issues.push(issue(
                    path.clone(),
                    format!("row sum ≠ 1 (got {})", row.p0 + row.p1),
                ));
            }
        }
        if node.cpt.len() != expected {
            issues.push(issue(
                format!("nodes[{i}].cpt"),
                format!(
                    "expected {expected} rows for {k} parents, found {}",
                    node.cpt.len()
                ),
            ));
        }
    }

    if !issues.is_empty() {
        return Err(BnError::Load(issues));
    }

    // Declaration-order network, used only to compute the topological renumbering.
    let declared = BayesianNetwork::new(
        doc.nodes
            .iter()
            .map(|n| {
                let parents = n
                    .parents
                    .iter()
                    .map(|p| NodeId(index[p.as_str()]))
                    .collect();
                (
                    n.name.clone(),
                    Cpt::new(parents, vec![(0.5, 0.5); 1 << n.parents.len()]),
                )
            })
            .collect(),
    );
    if let Err(violations) = declared.validate() {
        let issues = violations
            .into_iter()
            .map(|v| match v {
                super::Violation::Cycle { nodes } => {
                    let names: Vec<&str> = nodes
                        .iter()
                        .map(|id| doc.nodes[id.0].name.as_str())
                        .collect();
                    issue(
                        "nodes".into(),
                        format!("directed cycle through {}", names.join(", ")),
                    )
                }
                other => issue("nodes".into(), other.to_string()),
            })
            .collect();
        return Err(BnError::Load(issues));
    }

    let order = declared.topological_order();
    let mut new_id = vec![NodeId(0); order.len()];
    for (pos, old) in order.iter().enumerate() {
        new_id[old.0] = NodeId(pos);
    }
    let nodes = order
        .iter()
        .map(|old| {
            let n = &doc.nodes[old.0];
            let parents: Vec<NodeId> = n
                .parents
                .iter()
                .map(|p| new_id[index[p.as_str()]])
                .collect();
            let mut rows = vec![(0.0, 0.0); 1 << parents.len()];
            for row in &n.cpt {
                let k = n
                    .parents
                    .iter()
                    .fold(0usize, |acc, p| (acc << 1) | usize::from(row.given[p]));
                rows[k] = (row.p0, row.p1);
            }
            (n.name.clone(), Cpt::new(parents, rows))
        })
        .collect();
    let bn = BayesianNetwork::new(nodes);
    bn.validate().map_err(BnError::Invalid)?;
    Ok(bn)
}

/// Serialises a network; parent order and row keys are written explicitly.
pub fn to_json(bn: &BayesianNetwork) -> String {
    let doc = NetworkDoc {
        nodes: bn
            .nodes()
            .iter()
            .map(|n| {
                let parents: Vec<String> = n
                    .cpt
                    .parents()
                    .iter()
                    .map(|p| bn.node(*p).name.clone())
                    .collect();
                let cpt = n
                    .cpt
                    .rows()
                    .iter()
                    .enumerate()
                    .map(|(r, &(p0, p1))| RowDoc {
                        given: parents
                            .iter()
                            .cloned()
                            .zip(n.cpt.row_assignment(r))
                            .collect(),
                        p0,
                        p1,
                    })
                    .collect();
                NodeDoc {
                    name: n.name.clone(),
                    parents,
                    states: None,
                    cpt,
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network document serialises")
}
