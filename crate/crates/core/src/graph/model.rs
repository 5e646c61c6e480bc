use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chapter::ChapterId;

use super::GraphError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Taught in the video.
    Course,
    /// Attached so that no course node is isolated.
    Association,
    /// Hidden prerequisite extracted from a definition.
    Prerequisite,
}

impl NodeKind {
    pub fn is_skeleton(self) -> bool {
        !matches!(self, NodeKind::Prerequisite)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Course => "course",
            NodeKind::Association => "association",
            NodeKind::Prerequisite => "prerequisite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quiz {
    pub question: String,
    pub answer: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub definition: String,
    pub quiz: Option<Quiz>,
    pub source_chapters: BTreeSet<ChapterId>,
}

impl ConceptNode {
    pub fn new(name: impl Into<String>, kind: NodeKind) -> Self {
        let name = name.into();
        Self {
            id: NodeId::new(slug(&name)),
            name,
            kind,
            definition: String::new(),
            quiz: None,
            source_chapters: BTreeSet::new(),
        }
    }

    pub fn with_chapter(mut self, chapter: impl Into<String>) -> Self {
        self.source_chapters.insert(ChapterId::new(chapter));
        self
    }
}

/// Case-insensitive, whitespace-normalized identity of a concept name.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// URL-safe id derived from the normalized name.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    let mut dash = false;
    for c in normalize_name(name).chars() {
        if c.is_alphanumeric() {
            out.push(c);
            dash = false;
        } else if !dash && !out.is_empty() {
            out.push('-');
            dash = true;
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        out.push_str("concept");
    }
    out
}

/// Why a proposed edge was not inserted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum EdgeRejection {
    SelfLoop { node: NodeId },
    Cycle { from: NodeId, to: NodeId },
    UnknownEndpoint { from: String, to: String },
}

impl std::fmt::Display for EdgeRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeRejection::SelfLoop { node } => write!(f, "self-loop on {node} rejected"),
            EdgeRejection::Cycle { from, to } => {
                write!(f, "edge {from} -> {to} rejected: would close a cycle")
            }
            EdgeRejection::UnknownEndpoint { from, to } => {
                write!(f, "edge {from} -> {to} rejected: unknown endpoint")
            }
        }
    }
}

/// Prerequisite DAG. An edge `(u, v)` means `u` is a prerequisite of `v`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    nodes: BTreeMap<NodeId, ConceptNode>,
    edges: BTreeSet<(NodeId, NodeId)>,
    by_name: BTreeMap<String, NodeId>,
}

impl DependencyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a node, assigning a fresh id if its id is taken. Fails if a
    /// node with the same normalized name exists.
    pub fn add_node(&mut self, mut node: ConceptNode) -> Result<NodeId, GraphError> {
        let key = normalize_name(&node.name);
        if self.by_name.contains_key(&key) {
            return Err(GraphError::DuplicateName(node.name));
        }
        if self.nodes.contains_key(&node.id) {
            let base = node.id.0.clone();
            let mut n = 2;
            while self.nodes.contains_key(&NodeId(format!("{base}-{n}"))) {
                n += 1;
            }
            node.id = NodeId(format!("{base}-{n}"));
        }
        let id = node.id.clone();
        self.by_name.insert(key, id.clone());
        self.nodes.insert(id.clone(), node);
        Ok(id)
    }

    /// Inserts a node keeping its id verbatim; used when reading exports.
    pub(crate) fn insert_raw(&mut self, node: ConceptNode) -> Result<(), GraphError> {
        let key = normalize_name(&node.name);
        if self.by_name.contains_key(&key) || self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateName(node.name));
        }
        self.by_name.insert(key, node.id.clone());
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn node(&self, id: &NodeId) -> Option<&ConceptNode> {
        self.nodes.get(id)
    }

    pub fn node_mut(&mut self, id: &NodeId) -> Option<&mut ConceptNode> {
        self.nodes.get_mut(id)
    }

    pub fn find_by_name(&self, name: &str) -> Option<&NodeId> {
        self.by_name.get(&normalize_name(name))
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    /// Nodes ordered by id.
    pub fn nodes(&self) -> impl Iterator<Item = &ConceptNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &(NodeId, NodeId)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: &NodeId, to: &NodeId) -> bool {
        self.edges.contains(&(from.clone(), to.clone()))
    }

    pub fn successors<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.edges
            .range((id.clone(), NodeId(String::new()))..)
            .take_while(move |(u, _)| u == id)
            .map(|(_, v)| v)
    }

    pub fn predecessors<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.edges.iter().filter(move |(_, v)| v == id).map(|(u, _)| u)
    }

    pub fn degree(&self, id: &NodeId) -> usize {
        self.edges.iter().filter(|(u, v)| u == id || v == id).count()
    }

    /// True if `to` is reachable from `from` (a node reaches itself).
    pub fn reaches(&self, from: &NodeId, to: &NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            for s in self.successors(n) {
                if s == to {
                    return true;
                }
                if seen.insert(s) {
                    stack.push(s);
                }
            }
        }
        false
    }

    /// Inserts `from -> to` unless it is a self-loop or would close a cycle.
    /// Returns `Ok(false)` if the edge already existed.
    pub fn try_add_edge(&mut self, from: &NodeId, to: &NodeId) -> Result<bool, EdgeRejection> {
        if !self.contains(from) || !self.contains(to) {
            return Err(EdgeRejection::UnknownEndpoint {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        if from == to {
            return Err(EdgeRejection::SelfLoop { node: from.clone() });
        }
        if self.has_edge(from, to) {
            return Ok(false);
        }
        if self.reaches(to, from) {
            return Err(EdgeRejection::Cycle {
                from: from.clone(),
                to: to.clone(),
            });
        }
        self.edges.insert((from.clone(), to.clone()));
        Ok(true)
    }

    /// Inserts without a cycle check; callers must keep the graph acyclic.
    pub(crate) fn insert_edge_unchecked(&mut self, from: NodeId, to: NodeId) {
        self.edges.insert((from, to));
    }

    pub(crate) fn remove_edge(&mut self, from: &NodeId, to: &NodeId) -> bool {
        self.edges.remove(&(from.clone(), to.clone()))
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<NodeId>) -> DependencyGraph {
        let mut g = DependencyGraph::new();
        for id in keep {
            if let Some(n) = self.nodes.get(id) {
                g.by_name.insert(normalize_name(&n.name), id.clone());
                g.nodes.insert(id.clone(), n.clone());
            }
        }
        g.edges = self
            .edges
            .iter()
            .filter(|(u, v)| keep.contains(u) && keep.contains(v))
            .cloned()
            .collect();
        g
    }

    pub fn skeleton_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes
            .values()
            .filter(|n| n.kind.is_skeleton())
            .map(|n| &n.id)
    }

    /// Union of all chapters referenced by any node.
    pub fn chapters(&self) -> BTreeSet<ChapterId> {
        self.nodes
            .values()
            .flat_map(|n| n.source_chapters.iter().cloned())
            .collect()
    }
}

/// Dense index view used by the graph algorithms. Node `i` is the i-th id in
/// ascending order.
#[derive(Debug, Clone)]
pub(crate) struct Indexed {
    pub ids: Vec<NodeId>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl Indexed {
    pub fn new(g: &DependencyGraph) -> Self {
        Self::restricted(g, |_| true)
    }

    /// Keeps only nodes passing `keep` and the edges between them.
    pub fn restricted(g: &DependencyGraph, keep: impl Fn(&ConceptNode) -> bool) -> Self {
        let ids: Vec<NodeId> = g.nodes().filter(|n| keep(n)).map(|n| n.id.clone()).collect();
        let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut succ = vec![Vec::new(); ids.len()];
        let mut pred = vec![Vec::new(); ids.len()];
        for (u, v) in g.edges() {
            if let (Some(&a), Some(&b)) = (index.get(u), index.get(v)) {
                succ[a].push(b);
                pred[b].push(a);
            }
        }
        Self { ids, succ, pred }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// Kahn's algorithm, smallest index first. `None` if a cycle exists.
    pub fn toposort(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut indeg: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            order.push(u);
            for &v in &self.succ[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_slugs() {
        assert_eq!(normalize_name("  Max-Flow   Min Cut "), "max-flow min cut");
        assert_eq!(slug("Newton's Second Law"), "newton-s-second-law");
        assert_eq!(slug("  ??"), "concept");
    }

    #[test]
    fn duplicate_names_rejected_and_ids_disambiguated() {
        let mut g = DependencyGraph::new();
        g.add_node(ConceptNode::new("Max Flow", NodeKind::Course)).unwrap();
        assert!(matches!(
            g.add_node(ConceptNode::new("max  flow", NodeKind::Course)),
            Err(GraphError::DuplicateName(_))
        ));
        let id = g.add_node(ConceptNode::new("Max-Flow", NodeKind::Course)).unwrap();
        assert_eq!(id.as_str(), "max-flow-2");
        assert_eq!(g.find_by_name("MAX-FLOW"), Some(&id));
    }

    #[test]
    fn edge_rules() {
        let mut g = DependencyGraph::new();
        let a = g.add_node(ConceptNode::new("a", NodeKind::Course)).unwrap();
        let b = g.add_node(ConceptNode::new("b", NodeKind::Course)).unwrap();
        assert_eq!(g.try_add_edge(&a, &b), Ok(true));
        assert_eq!(g.try_add_edge(&a, &b), Ok(false));
        assert!(matches!(g.try_add_edge(&b, &a), Err(EdgeRejection::Cycle { .. })));
        assert!(matches!(g.try_add_edge(&a, &a), Err(EdgeRejection::SelfLoop { .. })));
        assert_eq!(g.successors(&a).collect::<Vec<_>>(), vec![&b]);
        assert_eq!(g.predecessors(&b).collect::<Vec<_>>(), vec![&a]);
        assert_eq!(g.degree(&a), 1);
    }
}
