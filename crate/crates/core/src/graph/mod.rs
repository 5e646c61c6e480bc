//! Prerequisite DAG: construction, reduction, layout, chapter views, export.

mod dag;
mod export;
mod layout;
mod model;
mod subgraph;
mod svg;

use thiserror::Error;

use crate::chapter::ChapterId;

pub use dag::{build_dag, is_acyclic, toposort, transitive_reduce};
pub use export::GraphDocument;
pub use layout::{
    hex_layout, layered_layout, prerequisite_neighbours, ring, ring_slots, skeleton_cell, Hex,
    LayoutPlacement, Placement, DIRECTIONS, RING_CAPACITY, SKELETON_SPACING,
};
pub use model::{normalize_name, slug, ConceptNode, DependencyGraph, EdgeRejection, NodeId, NodeKind, Quiz};
pub use subgraph::chapter_subgraph;
pub use svg::render_svg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph contains a cycle")]
    CyclicInput,
    #[error("a concept named {0:?} already exists")]
    DuplicateName(String),
    #[error("skeleton node {node} has {count} prerequisite neighbours; two hex rings hold at most 18")]
    RingOverflow { node: NodeId, count: usize },
    #[error("prerequisite node {0} is not adjacent to any skeleton node")]
    DetachedPrerequisite(NodeId),
    #[error("unknown chapter {0}")]
    UnknownChapter(ChapterId),
    #[error("graph document has no layout section")]
    MissingLayout,
    #[error("malformed graph document: {0}")]
    BadDocument(String),
}

/// Transitive reduction, layering and hex placement in one call.
pub fn reduce_and_layout(
    graph: &DependencyGraph,
    side: f64,
) -> Result<GraphDocument, GraphError> {
    let reduced = transitive_reduce(graph)?;
    let layers = layered_layout(&reduced)?;
    let layout = hex_layout(&layers, &reduced, side)?;
    Ok(GraphDocument::new(reduced, Some(layout)))
}

/// Chapter view of a laid-out document; the layout is restricted to the
/// retained nodes.
pub fn chapter_document(doc: &GraphDocument, chapter: &ChapterId) -> Result<GraphDocument, GraphError> {
    let sub = chapter_subgraph(&doc.graph, chapter)?;
    let keep: std::collections::BTreeSet<NodeId> = sub.node_ids().cloned().collect();
    let layout = doc.layout.as_ref().map(|l| l.restricted_to(&keep));
    Ok(GraphDocument::new(sub, layout))
}
