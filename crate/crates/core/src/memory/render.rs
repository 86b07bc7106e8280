//! Natural-language rendering of a memory graph, and a parser for the node
//! clauses it produces.

use std::cmp::Reverse;
use std::sync::OnceLock;

use regex::Regex;

use super::{MemoryEdge, MemoryGraph, MemoryNode};

fn node_clause(n: &MemoryNode) -> String {
    let mut s = n.name.clone();
    if !n.attributes.is_empty() {
        let attrs: Vec<&str> = n.attributes.iter().map(String::as_str).collect();
        s.push_str(&format!(" ({})", attrs.join(", ")));
    }
    if let Some(l) = n.location {
        s.push_str(&format!(" at ({:.1}, {:.1})", l.x, l.y));
    }
    s.push('.');
    s
}

fn edge_clause(e: &MemoryEdge) -> String {
    format!("{} is {} {}.", e.start, e.relation, e.target)
}

impl MemoryGraph {
    /// One clause per line: nodes (by name) then edges. When there are more
    /// than `budget` clauses, the most recently seen ones are kept; an edge
    /// is as recent as its newer endpoint.
    pub fn render_text(&self, budget: usize) -> String {
        let budget = budget.max(1);
        let recency = |name: &str| self.nodes.get(name).map_or(0, |n| n.last_seen);
        // (recency, is_edge, position) so nodes win ties over edges
        let mut items: Vec<(u64, bool, usize)> = self
            .nodes
            .values()
            .enumerate()
            .map(|(k, n)| (n.last_seen, false, k))
            .chain(
                self.edges
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (recency(&e.start).max(recency(&e.target)), true, k)),
            )
            .collect();
        items.sort_by_key(|&(r, is_edge, k)| (Reverse(r), is_edge, k));
        items.truncate(budget);
        items.sort_by_key(|&(_, is_edge, k)| (is_edge, k));

        let nodes: Vec<&MemoryNode> = self.nodes.values().collect();
        let edges: Vec<&MemoryEdge> = self.edges.iter().collect();
        items
            .iter()
            .map(|&(_, is_edge, k)| {
                if is_edge {
                    edge_clause(edges[k])
                } else {
                    node_clause(nodes[k])
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// A node clause recovered from rendered memory text.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedNode {
    pub name: String,
    pub attributes: Vec<String>,
    pub location: Option<(f64, f64)>,
}

fn node_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(?P<name>[^()]+?)(?: \((?P<attrs>[^()]*)\))?(?: at \((?P<x>-?[0-9.]+), (?P<y>-?[0-9.]+)\))?\.$",
        )
        .unwrap()
    })
}

/// Parses the node clauses of [`MemoryGraph::render_text`] output. Edge
/// clauses (`a is rel b.`) are skipped.
pub fn parse_text(text: &str) -> Vec<RenderedNode> {
    text.lines()
        .filter_map(|line| {
            let caps = node_re().captures(line.trim())?;
            let name = caps.name("name")?.as_str().to_string();
            if name.contains(" is ") {
                return None;
            }
            let attributes = caps
                .name("attrs")
                .map(|a| a.as_str().split(", ").map(str::to_string).collect())
                .unwrap_or_default();
            let location = match (caps.name("x"), caps.name("y")) {
                (Some(x), Some(y)) => Some((x.as_str().parse().ok()?, y.as_str().parse().ok()?)),
                _ => None,
            };
            Some(RenderedNode {
                name,
                attributes,
                location,
            })
        })
        .collect()
}
