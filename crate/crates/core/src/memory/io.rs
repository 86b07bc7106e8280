//! JSON persistence: `{version, nodes: [...], edges: [...]}`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MemoryEdge, MemoryError, MemoryGraph, MemoryNode};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub version: u64,
    pub nodes: Vec<MemoryNode>,
    pub edges: Vec<MemoryEdge>,
}

impl From<MemoryGraph> for GraphFile {
    fn from(g: MemoryGraph) -> Self {
        GraphFile {
            version: g.version,
            nodes: g.nodes.into_values().collect(),
            edges: g.edges.into_iter().collect(),
        }
    }
}

impl TryFrom<GraphFile> for MemoryGraph {
    type Error = MemoryError;

    fn try_from(f: GraphFile) -> Result<Self, Self::Error> {
        let mut nodes = BTreeMap::new();
        for n in f.nodes {
            if n.name.trim().is_empty() {
                return Err(MemoryError::SchemaViolation("node with empty name".into()));
            }
            if let Some(l) = n.location {
                if !(l.x.is_finite() && l.y.is_finite()) {
                    return Err(MemoryError::SchemaViolation(format!(
                        "node `{}` has a non-finite location",
                        n.name
                    )));
                }
            }
            let name = n.name.clone();
            if nodes.insert(name.clone(), n).is_some() {
                return Err(MemoryError::SchemaViolation(format!("duplicate node `{name}`")));
            }
        }
        let mut edges = BTreeSet::new();
        for e in f.edges {
            for end in [&e.start, &e.target] {
                if !nodes.contains_key(end) {
                    return Err(MemoryError::SchemaViolation(format!(
                        "edge {} -[{}]-> {} references missing node `{end}`",
                        e.start, e.relation, e.target
                    )));
                }
            }
            if e.start == e.target {
                return Err(MemoryError::SchemaViolation(format!("self-loop on `{}`", e.start)));
            }
            edges.insert(e);
        }
        Ok(MemoryGraph {
            nodes,
            edges,
            version: f.version,
        })
    }
}

pub fn save(g: &MemoryGraph, path: impl AsRef<Path>) -> Result<(), MemoryError> {
    let text = serde_json::to_string_pretty(g).expect("graph serializes");
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<MemoryGraph, MemoryError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| MemoryError::SchemaViolation(e.to_string()))
}
