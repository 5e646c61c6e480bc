//! Canonical graph JSON:
//!
//! ```json
//! {"edges": [["u", "v"]],
//!  "layout": {"id": {"layer": 0, "q": 0, "r": 0, "x": 0.0, "y": 0.0}},
//!  "nodes": [{"chapters": [], "definition": "", "id": "", "kind": "course",
//!             "name": "", "quiz": null}]}
//! ```
//!
//! Keys are emitted in sorted order, nodes by id, edges lexicographically.
//! The `layout` key is omitted when no layout is attached.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chapter::ChapterId;

use super::layout::{LayoutPlacement, Placement};
use super::model::{ConceptNode, DependencyGraph, NodeId, NodeKind, Quiz};
use super::GraphError;

// Field order below is alphabetical; serialization preserves it.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeRecord {
    chapters: Vec<ChapterId>,
    #[serde(default)]
    definition: String,
    id: NodeId,
    kind: NodeKind,
    name: String,
    #[serde(default)]
    quiz: Option<Quiz>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CellRecord {
    layer: Option<usize>,
    q: i32,
    r: i32,
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Document {
    edges: Vec<(NodeId, NodeId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<BTreeMap<NodeId, CellRecord>>,
    nodes: Vec<NodeRecord>,
}

/// A graph together with its optional layout, as exchanged with clients.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDocument {
    pub graph: DependencyGraph,
    pub layout: Option<LayoutPlacement>,
}

impl GraphDocument {
    pub fn new(graph: DependencyGraph, layout: Option<LayoutPlacement>) -> Self {
        Self { graph, layout }
    }

    fn to_document(&self) -> Document {
        Document {
            edges: self.graph.edges().cloned().collect(),
            layout: self.layout.as_ref().map(|l| {
                l.cells
                    .iter()
                    .map(|(id, p)| {
                        (
                            id.clone(),
                            CellRecord {
                                layer: p.layer,
                                q: p.q,
                                r: p.r,
                                x: p.x,
                                y: p.y,
                            },
                        )
                    })
                    .collect()
            }),
            nodes: self
                .graph
                .nodes()
                .map(|n| NodeRecord {
                    chapters: n.source_chapters.iter().cloned().collect(),
                    definition: n.definition.clone(),
                    id: n.id.clone(),
                    kind: n.kind,
                    name: n.name.clone(),
                    quiz: n.quiz.clone(),
                })
                .collect(),
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_document()).expect("graph document serializes")
    }

    /// Pretty-printed canonical JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| GraphError::BadDocument(e.to_string()))?;
        let mut graph = DependencyGraph::new();
        for n in doc.nodes {
            graph
                .insert_raw(ConceptNode {
                    id: n.id,
                    name: n.name,
                    kind: n.kind,
                    definition: n.definition,
                    quiz: n.quiz,
                    source_chapters: n.chapters.into_iter().collect::<BTreeSet<_>>(),
                })
                .map_err(|e| GraphError::BadDocument(e.to_string()))?;
        }
        for (u, v) in doc.edges {
            if !graph.contains(&u) || !graph.contains(&v) {
                return Err(GraphError::BadDocument(format!("edge {u} -> {v} names an unknown node")));
            }
            graph.insert_edge_unchecked(u, v);
        }
        if !super::dag::is_acyclic(&graph) {
            return Err(GraphError::CyclicInput);
        }
        let layout = doc.layout.map(|cells| LayoutPlacement {
            side: infer_side(&cells),
            cells: cells
                .into_iter()
                .map(|(id, c)| {
                    (
                        id,
                        Placement {
                            q: c.q,
                            r: c.r,
                            x: c.x,
                            y: c.y,
                            layer: c.layer,
                        },
                    )
                })
                .collect(),
        });
        Ok(Self { graph, layout })
    }
}

/// Recovers the hex side length from any cell off the origin.
fn infer_side(cells: &BTreeMap<NodeId, CellRecord>) -> f64 {
    for c in cells.values() {
        if c.r != 0 {
            return c.y / (1.5 * c.r as f64);
        }
        if c.q != 0 {
            return c.x / (3f64.sqrt() * c.q as f64);
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::layout::{hex_layout, layered_layout};

    fn sample() -> GraphDocument {
        let mut g = DependencyGraph::new();
        let mut a = ConceptNode::new("Graph", NodeKind::Course).with_chapter("1");
        a.definition = "A set of vertices and edges.".into();
        a.quiz = Some(Quiz {
            question: "q".into(),
            answer: "a".into(),
            explanation: "e".into(),
        });
        let a = g.add_node(a).unwrap();
        let b = g.add_node(ConceptNode::new("Flow", NodeKind::Course).with_chapter("2")).unwrap();
        let p = g.add_node(ConceptNode::new("Vertex", NodeKind::Prerequisite)).unwrap();
        g.try_add_edge(&a, &b).unwrap();
        g.try_add_edge(&p, &a).unwrap();
        let layers = layered_layout(&g).unwrap();
        let layout = hex_layout(&layers, &g, 12.5).unwrap();
        GraphDocument::new(g, Some(layout))
    }

    #[test]
    fn round_trip_preserves_everything() {
        let doc = sample();
        let text = doc.to_json();
        let back = GraphDocument::from_json(&text).unwrap();
        assert_eq!(back.graph, doc.graph);
        let layout = back.layout.as_ref().unwrap();
        assert!((layout.side - 12.5).abs() < 1e-12);
        assert_eq!(layout.cells, doc.layout.as_ref().unwrap().cells);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn keys_are_sorted() {
        let text = sample().to_json();
        let e = text.find("\"edges\"").unwrap();
        let l = text.find("\"layout\"").unwrap();
        let n = text.find("\"nodes\"").unwrap();
        assert!(e < l && l < n);
        let first_node = &text[n..];
        let keys = ["\"chapters\"", "\"definition\"", "\"id\"", "\"kind\"", "\"name\"", "\"quiz\""];
        let pos: Vec<usize> = keys.iter().map(|k| first_node.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn no_layout_key_without_layout() {
        let mut doc = sample();
        doc.layout = None;
        let text = doc.to_json();
        assert!(!text.contains("\"layout\""));
        assert!(GraphDocument::from_json(&text).unwrap().layout.is_none());
    }

    #[test]
    fn rejects_dangling_and_cyclic_edges() {
        let bad = r#"{"edges":[["a","zz"]],"nodes":[{"chapters":[],"id":"a","kind":"course","name":"a"}]}"#;
        assert!(matches!(GraphDocument::from_json(bad), Err(GraphError::BadDocument(_))));
        let cyc = r#"{"edges":[["a","b"],["b","a"]],"nodes":[
            {"chapters":[],"id":"a","kind":"course","name":"a"},
            {"chapters":[],"id":"b","kind":"course","name":"b"}]}"#;
        assert_eq!(GraphDocument::from_json(cyc), Err(GraphError::CyclicInput));
    }
}
