//! Graph memory: named object nodes joined by directed spatial-relation edges.
//!
//! Nodes are keyed by name. Re-observing a node unions its attributes and
//! moves its location only when the new observation is at least as recent.
//! [`merge`] joins two graphs field-wise so that it is commutative,
//! associative and idempotent, which lets agents exchange memories in any
//! order.

mod io;
mod query;
mod render;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load, save, GraphFile};
pub use query::{PathHop, SemanticFilter, MAX_HOPS};
pub use render::{parse_text, RenderedNode};

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("node name is empty")]
    EmptyName,
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no path between `{0}` and `{1}`")]
    NoPath(String, String),
    #[error("hop count {0} exceeds the maximum of {MAX_HOPS}")]
    HopsTooLarge(usize),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

/// Where a node was last observed, and when.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    pub step: u64,
}

impl Location {
    fn key_cmp(&self, other: &Location) -> std::cmp::Ordering {
        self.step
            .cmp(&other.step)
            .then(self.x.total_cmp(&other.x))
            .then(self.y.total_cmp(&other.y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryNode {
    pub name: String,
    pub attributes: BTreeSet<String>,
    pub location: Option<Location>,
    pub last_seen: u64,
    pub source_agent: String,
}

impl MemoryNode {
    /// Field-wise join used by [`merge`].
    fn join(&self, other: &MemoryNode) -> MemoryNode {
        let attributes = self.attributes.union(&other.attributes).cloned().collect();
        let location = match (self.location, other.location) {
            (Some(a), Some(b)) => Some(if a.key_cmp(&b).is_ge() { a } else { b }),
            (a, b) => a.or(b),
        };
        let newest = if (self.last_seen, &self.source_agent) >= (other.last_seen, &other.source_agent)
        {
            self
        } else {
            other
        };
        MemoryNode {
            name: self.name.clone(),
            attributes,
            location,
            last_seen: newest.last_seen,
            source_agent: newest.source_agent.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MemoryEdge {
    pub start: String,
    pub target: String,
    pub relation: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct MemoryGraph {
    nodes: BTreeMap<String, MemoryNode>,
    edges: BTreeSet<MemoryEdge>,
    version: u64,
}

/// Structural equality; the version counter is ignored.
impl PartialEq for MemoryGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl MemoryGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }
    pub fn nodes(&self) -> impl Iterator<Item = &MemoryNode> {
        self.nodes.values()
    }
    pub fn edges(&self) -> impl Iterator<Item = &MemoryEdge> {
        self.edges.iter()
    }
    pub fn node(&self, name: &str) -> Option<&MemoryNode> {
        self.nodes.get(name)
    }
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn has_edge(&self, start: &str, target: &str, relation: &str) -> bool {
        self.edges.contains(&MemoryEdge {
            start: start.into(),
            target: target.into(),
            relation: relation.into(),
        })
    }

    /// Creates or updates a node. Returns whether the graph changed.
    pub fn add_node<I, S>(
        &mut self,
        name: &str,
        attributes: I,
        location: Option<(f64, f64)>,
        step: u64,
        agent: &str,
    ) -> Result<bool, MemoryError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if name.trim().is_empty() {
            return Err(MemoryError::EmptyName);
        }
        let attributes: BTreeSet<String> = attributes.into_iter().map(Into::into).collect();
        let location = location.map(|(x, y)| Location { x, y, step });
        let changed = match self.nodes.get_mut(name) {
            None => {
                self.nodes.insert(
                    name.to_string(),
                    MemoryNode {
                        name: name.to_string(),
                        attributes,
                        location,
                        last_seen: step,
                        source_agent: agent.to_string(),
                    },
                );
                true
            }
            Some(node) => {
                let before = node.clone();
                node.attributes.extend(attributes);
                if step >= node.last_seen {
                    if location.is_some() {
                        node.location = location;
                    }
                    node.last_seen = step;
                    node.source_agent = agent.to_string();
                }
                *node != before
            }
        };
        if changed {
            self.version += 1;
        }
        Ok(changed)
    }

    /// Adds a directed edge, creating attribute-less endpoints as needed.
    /// Returns whether the graph changed.
    pub fn add_edge(&mut self, start: &str, target: &str, relation: &str) -> Result<bool, MemoryError> {
        if start.trim().is_empty() || target.trim().is_empty() {
            return Err(MemoryError::EmptyName);
        }
        if start == target {
            return Err(MemoryError::SelfLoop(start.to_string()));
        }
        let mut changed = false;
        for name in [start, target] {
            if !self.nodes.contains_key(name) {
                self.nodes.insert(
                    name.to_string(),
                    MemoryNode {
                        name: name.to_string(),
                        attributes: BTreeSet::new(),
                        location: None,
                        last_seen: 0,
                        source_agent: String::new(),
                    },
                );
                changed = true;
            }
        }
        changed |= self.edges.insert(MemoryEdge {
            start: start.to_string(),
            target: target.to_string(),
            relation: relation.to_string(),
        });
        if changed {
            self.version += 1;
        }
        Ok(changed)
    }

    /// Induced subgraph on `names` (unknown names are ignored).
    pub fn induced(&self, names: &BTreeSet<String>) -> MemoryGraph {
        MemoryGraph {
            nodes: self
                .nodes
                .iter()
                .filter(|(k, _)| names.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| names.contains(&e.start) && names.contains(&e.target))
                .cloned()
                .collect(),
            version: self.version,
        }
    }

    /// True when every edge endpoint is a node.
    pub fn is_closed(&self) -> bool {
        self.edges
            .iter()
            .all(|e| self.nodes.contains_key(&e.start) && self.nodes.contains_key(&e.target))
    }
}

/// Conflict-free union of two graphs; argument order does not matter.
pub fn merge(a: &MemoryGraph, b: &MemoryGraph) -> MemoryGraph {
    let mut nodes = a.nodes.clone();
    for (name, nb) in &b.nodes {
        let joined = match nodes.get(name) {
            Some(na) => na.join(nb),
            None => nb.clone(),
        };
        nodes.insert(name.clone(), joined);
    }
    MemoryGraph {
        nodes,
        edges: a.edges.union(&b.edges).cloned().collect(),
        version: a.version.max(b.version) + 1,
    }
}
