use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{MemoryError, MemoryGraph};
use crate::goal::normalize_term;

/// Largest neighborhood radius accepted by [`MemoryGraph::spatial_query`].
pub const MAX_HOPS: usize = 3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticFilter {
    /// Case-insensitive substring of the node name; `_` and space are equivalent.
    pub name_pattern: Option<String>,
    #[serde(default)]
    pub required_attributes: Vec<String>,
    /// Node must touch an edge with this relation.
    pub relation: Option<String>,
    #[serde(default)]
    pub hops: usize,
}

/// One step of an inferred path: follow `relation` to `node`. `forward` is
/// false when the stored edge points the other way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHop {
    pub relation: String,
    pub forward: bool,
    pub node: String,
}

impl MemoryGraph {
    fn undirected(&self) -> BTreeMap<&str, Vec<(&str, &str, bool)>> {
        let mut adj: BTreeMap<&str, Vec<(&str, &str, bool)>> = BTreeMap::new();
        for e in &self.edges {
            adj.entry(&e.start).or_default().push((&e.target, &e.relation, true));
            adj.entry(&e.target).or_default().push((&e.start, &e.relation, false));
        }
        for list in adj.values_mut() {
            // lexicographic neighbor, forward edges first, then relation
            list.sort_by(|a, b| a.0.cmp(b.0).then(b.2.cmp(&a.2)).then(a.1.cmp(b.1)));
        }
        adj
    }

    fn matches(&self, name: &str, f: &SemanticFilter) -> bool {
        let node = &self.nodes[name];
        if let Some(p) = &f.name_pattern {
            if !normalize_term(name).contains(&normalize_term(p)) {
                return false;
            }
        }
        let attrs: BTreeSet<String> = node.attributes.iter().map(|a| normalize_term(a)).collect();
        if !f
            .required_attributes
            .iter()
            .all(|a| attrs.contains(&normalize_term(a)))
        {
            return false;
        }
        if let Some(rel) = &f.relation {
            return self
                .edges
                .iter()
                .any(|e| &e.relation == rel && (e.start == name || e.target == name));
        }
        true
    }

    /// Matching nodes plus everything within `filter.hops` undirected hops,
    /// as an induced subgraph.
    pub fn spatial_query(&self, filter: &SemanticFilter) -> Result<MemoryGraph, MemoryError> {
        if filter.hops > MAX_HOPS {
            return Err(MemoryError::HopsTooLarge(filter.hops));
        }
        let adj = self.undirected();
        let mut keep: BTreeSet<String> = BTreeSet::new();
        let mut frontier: Vec<&str> = Vec::new();
        for name in self.nodes.keys() {
            if self.matches(name, filter) {
                keep.insert(name.clone());
                frontier.push(name);
            }
        }
        for _ in 0..filter.hops {
            let mut next = Vec::new();
            for n in frontier {
                for &(m, _, _) in adj.get(n).map(Vec::as_slice).unwrap_or_default() {
                    if keep.insert(m.to_string()) {
                        next.push(m);
                    }
                }
            }
            frontier = next;
        }
        Ok(self.induced(&keep))
    }

    /// Minimum-hop route from `start` to `target`, walking edges in either
    /// direction.
    pub fn path_inference(&self, start: &str, target: &str) -> Result<Vec<PathHop>, MemoryError> {
        for n in [start, target] {
            if !self.nodes.contains_key(n) {
                return Err(MemoryError::UnknownNode(n.to_string()));
            }
        }
        if start == target {
            return Ok(Vec::new());
        }
        let adj = self.undirected();
        let mut parent: BTreeMap<&str, (&str, &str, bool)> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        let mut seen = BTreeSet::from([start]);
        while let Some(n) = queue.pop_front() {
            if n == target {
                break;
            }
            for &(m, rel, fwd) in adj.get(n).map(Vec::as_slice).unwrap_or_default() {
                if seen.insert(m) {
                    parent.insert(m, (n, rel, fwd));
                    queue.push_back(m);
                }
            }
        }
        if !parent.contains_key(target) {
            return Err(MemoryError::NoPath(start.to_string(), target.to_string()));
        }
        let mut hops = Vec::new();
        let mut cur = target;
        while cur != start {
            let (prev, rel, fwd) = parent[cur];
            hops.push(PathHop {
                relation: rel.to_string(),
                forward: fwd,
                node: cur.to_string(),
            });
            cur = prev;
        }
        hops.reverse();
        Ok(hops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kitchen() -> MemoryGraph {
        let mut g = MemoryGraph::new();
        g.add_edge("kitchen", "fridge", "next to").unwrap();
        g.add_edge("fridge", "cabinet", "above").unwrap();
        g
    }

    #[test]
    fn path_follows_relations() {
        let hops = kitchen().path_inference("kitchen", "cabinet").unwrap();
        assert_eq!(
            hops,
            vec![
                PathHop { relation: "next to".into(), forward: true, node: "fridge".into() },
                PathHop { relation: "above".into(), forward: true, node: "cabinet".into() },
            ]
        );
        let back = kitchen().path_inference("cabinet", "kitchen").unwrap();
        assert!(back.iter().all(|h| !h.forward));
    }

    #[test]
    fn path_edge_cases() {
        let mut g = kitchen();
        assert!(g.path_inference("fridge", "fridge").unwrap().is_empty());
        g.add_node("garage", Vec::<String>::new(), None, 0, "a").unwrap();
        assert!(matches!(g.path_inference("kitchen", "garage"), Err(MemoryError::NoPath(..))));
        assert!(matches!(g.path_inference("kitchen", "attic"), Err(MemoryError::UnknownNode(_))));
    }

    #[test]
    fn neighborhood_query() {
        let mut g = MemoryGraph::new();
        g.add_node("charging station", ["black"], None, 1, "a").unwrap();
        g.add_node("seating area", Vec::<String>::new(), None, 1, "a").unwrap();
        g.add_edge("charging station", "seating area", "next to").unwrap();
        g.add_edge("seating area", "window", "next to").unwrap();
        let f = SemanticFilter {
            name_pattern: Some("charging_station".into()),
            hops: 1,
            ..Default::default()
        };
        let sub = g.spatial_query(&f).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert!(sub.has_edge("charging station", "seating area", "next to"));

        let none = SemanticFilter {
            name_pattern: Some("piano".into()),
            hops: 2,
            ..Default::default()
        };
        assert!(g.spatial_query(&none).unwrap().is_empty());

        let zero = SemanticFilter {
            name_pattern: Some("charging".into()),
            ..Default::default()
        };
        let sub = g.spatial_query(&zero).unwrap();
        assert_eq!((sub.node_count(), sub.edge_count()), (1, 0));

        let deep = SemanticFilter {
            hops: 4,
            ..Default::default()
        };
        assert!(matches!(g.spatial_query(&deep), Err(MemoryError::HopsTooLarge(4))));
    }

    #[test]
    fn attribute_and_relation_filters() {
        let mut g = kitchen();
        g.add_node("fridge", ["white"], None, 0, "a").unwrap();
        let f = SemanticFilter {
            required_attributes: vec!["White".into()],
            ..Default::default()
        };
        assert_eq!(g.spatial_query(&f).unwrap().node_count(), 1);
        let r = SemanticFilter {
            relation: Some("above".into()),
            ..Default::default()
        };
        let names: Vec<_> = g.spatial_query(&r).unwrap().nodes().map(|n| n.name.clone()).collect();
        assert_eq!(names, ["cabinet", "fridge"]);
    }

    /// Plain BFS hop count, written without the production adjacency.
    fn bfs_hops(g: &MemoryGraph, s: &str, t: &str) -> Option<usize> {
        let mut dist = BTreeMap::from([(s.to_string(), 0usize)]);
        let mut q = VecDeque::from([s.to_string()]);
        while let Some(n) = q.pop_front() {
            let d = dist[&n];
            for e in g.edges() {
                let other = if e.start == n {
                    &e.target
                } else if e.target == n {
                    &e.start
                } else {
                    continue;
                };
                if !dist.contains_key(other) {
                    dist.insert(other.clone(), d + 1);
                    q.push_back(other.clone());
                }
            }
        }
        dist.get(t).copied()
    }

    #[test]
    fn path_length_matches_bfs_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let n = rng.random_range(2..50);
            let mut g = MemoryGraph::new();
            for k in 0..n {
                g.add_node(&format!("n{k:02}"), Vec::<String>::new(), None, 0, "a").unwrap();
            }
            for _ in 0..rng.random_range(0..n * 2) {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a != b {
                    g.add_edge(&format!("n{a:02}"), &format!("n{b:02}"), "next to").unwrap();
                }
            }
            let (s, t) = (format!("n{:02}", rng.random_range(0..n)), format!("n{:02}", rng.random_range(0..n)));
            match (g.path_inference(&s, &t), bfs_hops(&g, &s, &t)) {
                (Ok(p), Some(d)) => {
                    assert_eq!(p.len(), d);
                    if let Some(last) = p.last() {
                        assert_eq!(last.node, t);
                    }
                }
                (Err(MemoryError::NoPath(..)), None) => {}
                other => panic!("mismatch: {other:?}"),
            }
        }
    }
}
