use std::collections::BTreeSet;

use crate::chapter::ChapterId;

use super::layout::prerequisite_neighbours;
use super::model::{DependencyGraph, NodeId, NodeKind};
use super::GraphError;

/// The part of the global graph a student needs while watching one chapter:
/// the chapter's course nodes, everything they transitively depend on, and
/// the prerequisite nodes attached to any retained skeleton node.
pub fn chapter_subgraph(
    graph: &DependencyGraph,
    chapter: &ChapterId,
) -> Result<DependencyGraph, GraphError> {
    if !graph.chapters().contains(chapter) {
        return Err(GraphError::UnknownChapter(chapter.clone()));
    }
    Ok(graph.induced(&chapter_node_set(graph, chapter)))
}

pub(crate) fn chapter_node_set(graph: &DependencyGraph, chapter: &ChapterId) -> BTreeSet<NodeId> {
    let mut keep: BTreeSet<NodeId> = graph
        .nodes()
        .filter(|n| n.kind == NodeKind::Course && n.source_chapters.contains(chapter))
        .map(|n| n.id.clone())
        .collect();
    let mut stack: Vec<NodeId> = keep.iter().cloned().collect();
    while let Some(n) = stack.pop() {
        for p in graph.predecessors(&n) {
            if keep.insert(p.clone()) {
                stack.push(p.clone());
            }
        }
    }
    let skeleton: Vec<NodeId> = keep
        .iter()
        .filter(|id| graph.node(id).is_some_and(|n| n.kind.is_skeleton()))
        .cloned()
        .collect();
    for s in skeleton {
        keep.extend(prerequisite_neighbours(graph, &s));
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::model::ConceptNode;

    #[test]
    fn source_chapter_and_cross_chapter_dependency() {
        let mut g = DependencyGraph::new();
        let id = NodeId::new;
        g.add_node(ConceptNode::new("graph", NodeKind::Course).with_chapter("1")).unwrap();
        g.add_node(ConceptNode::new("flow", NodeKind::Course).with_chapter("2")).unwrap();
        g.add_node(ConceptNode::new("cut", NodeKind::Course).with_chapter("3")).unwrap();
        g.add_node(ConceptNode::new("vertex", NodeKind::Prerequisite)).unwrap();
        g.add_node(ConceptNode::new("capacity", NodeKind::Prerequisite)).unwrap();
        g.try_add_edge(&id("vertex"), &id("graph")).unwrap();
        g.try_add_edge(&id("graph"), &id("flow")).unwrap();
        g.try_add_edge(&id("capacity"), &id("flow")).unwrap();

        let c1 = chapter_subgraph(&g, &ChapterId::new("1")).unwrap();
        let ids: Vec<_> = c1.node_ids().map(|n| n.as_str()).collect();
        assert_eq!(ids, vec!["graph", "vertex"]);

        let c2 = chapter_subgraph(&g, &ChapterId::new("2")).unwrap();
        let ids: Vec<_> = c2.node_ids().map(|n| n.as_str()).collect();
        assert_eq!(ids, vec!["capacity", "flow", "graph", "vertex"]);
        assert_eq!(c2.edge_count(), 3);

        let c3 = chapter_subgraph(&g, &ChapterId::new("3")).unwrap();
        assert_eq!(c3.node_count(), 1);

        assert_eq!(
            chapter_subgraph(&g, &ChapterId::new("9")),
            Err(GraphError::UnknownChapter(ChapterId::new("9")))
        );
    }
}
