use super::model::{ConceptNode, DependencyGraph, EdgeRejection, Indexed, NodeId};
use super::GraphError;

/// Builds a DAG from nodes and proposed `(prerequisite, dependent)` edges.
///
/// Edges are tried in ascending `(from name, to name)` order; self-loops,
/// unknown endpoints and edges that would close a cycle are skipped and
/// reported. Endpoints are looked up by normalized name.
pub fn build_dag(
    nodes: Vec<ConceptNode>,
    proposed_edges: &[(String, String)],
) -> Result<(DependencyGraph, Vec<EdgeRejection>), GraphError> {
    let mut graph = DependencyGraph::new();
    for n in nodes {
        graph.add_node(n)?;
    }
    let mut resolved: Vec<(String, String, Option<NodeId>, Option<NodeId>)> = proposed_edges
        .iter()
        .map(|(u, v)| {
            let a = graph.find_by_name(u).cloned();
            let b = graph.find_by_name(v).cloned();
            let name = |id: &Option<NodeId>, fallback: &str| match id {
                Some(id) => graph.node(id).map(|n| n.name.clone()).unwrap_or_default(),
                None => fallback.to_string(),
            };
            (name(&a, u), name(&b, v), a, b)
        })
        .collect();
    resolved.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    resolved.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);

    let mut rejected = Vec::new();
    for (u_name, v_name, a, b) in resolved {
        let (Some(a), Some(b)) = (a, b) else {
            rejected.push(EdgeRejection::UnknownEndpoint {
                from: u_name,
                to: v_name,
            });
            continue;
        };
        if let Err(r) = graph.try_add_edge(&a, &b) {
            tracing::warn!("{r}");
            rejected.push(r);
        }
    }
    Ok((graph, rejected))
}

pub fn is_acyclic(graph: &DependencyGraph) -> bool {
    Indexed::new(graph).toposort().is_some()
}

/// Topological order of node ids (ties by id).
pub fn toposort(graph: &DependencyGraph) -> Result<Vec<NodeId>, GraphError> {
    let idx = Indexed::new(graph);
    let order = idx.toposort().ok_or(GraphError::CyclicInput)?;
    Ok(order.into_iter().map(|i| idx.ids[i].clone()).collect())
}

/// Removes every edge `(u, v)` for which `v` stays reachable from `u`
/// through another successor of `u`. The result is the unique minimal DAG
/// with the same reachability relation.
pub fn transitive_reduce(graph: &DependencyGraph) -> Result<DependencyGraph, GraphError> {
    let idx = Indexed::new(graph);
    let order = idx.toposort().ok_or(GraphError::CyclicInput)?;
    let n = idx.len();
    // descendants[u] excludes u itself
    let words = n.div_ceil(64).max(1);
    let mut descendants = vec![vec![0u64; words]; n];
    for &u in order.iter().rev() {
        let mut acc = vec![0u64; words];
        for &v in &idx.succ[u] {
            acc[v / 64] |= 1 << (v % 64);
            for (a, d) in acc.iter_mut().zip(&descendants[v]) {
                *a |= d;
            }
        }
        descendants[u] = acc;
    }
    let mut reduced = graph.clone();
    for u in 0..n {
        for &v in &idx.succ[u] {
            let redundant = idx.succ[u]
                .iter()
                .any(|&w| w != v && descendants[w][v / 64] & (1 << (v % 64)) != 0);
            if redundant {
                reduced.remove_edge(&idx.ids[u], &idx.ids[v]);
            }
        }
    }
    Ok(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::model::NodeKind;

    fn nodes(names: &[&str]) -> Vec<ConceptNode> {
        names
            .iter()
            .map(|n| ConceptNode::new(*n, NodeKind::Course))
            .collect()
    }

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn edge_names(g: &DependencyGraph) -> Vec<(String, String)> {
        g.edges().map(|(u, v)| (u.0.clone(), v.0.clone())).collect()
    }

    #[test]
    fn triangle_rejects_last_sorted_edge() {
        let (g, rej) = build_dag(nodes(&["a", "b", "c"]), &edges(&[("c", "a"), ("a", "b"), ("b", "c")])).unwrap();
        assert!(is_acyclic(&g));
        assert_eq!(
            rej,
            vec![EdgeRejection::Cycle {
                from: NodeId::new("c"),
                to: NodeId::new("a")
            }]
        );
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn self_loop_and_empty() {
        let (g, rej) = build_dag(nodes(&["a"]), &edges(&[("a", "a")])).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(matches!(rej[0], EdgeRejection::SelfLoop { .. }));
        let (g, rej) = build_dag(nodes(&["a", "b"]), &[]).unwrap();
        assert_eq!((g.node_count(), g.edge_count(), rej.len()), (2, 0, 0));
    }

    #[test]
    fn unknown_endpoint_reported() {
        let (_, rej) = build_dag(nodes(&["a"]), &edges(&[("a", "zz")])).unwrap();
        assert!(matches!(rej[0], EdgeRejection::UnknownEndpoint { .. }));
    }

    #[test]
    fn reduce_examples() {
        let (g, _) = build_dag(nodes(&["a", "b", "c"]), &edges(&[("a", "b"), ("b", "c"), ("a", "c")])).unwrap();
        let r = transitive_reduce(&g).unwrap();
        assert_eq!(edge_names(&r), edges(&[("a", "b"), ("b", "c")]));

        let (chain, _) = build_dag(nodes(&["a", "b", "c"]), &edges(&[("a", "b"), ("b", "c")])).unwrap();
        assert_eq!(transitive_reduce(&chain).unwrap(), chain);

        let (diamond, _) = build_dag(
            nodes(&["a", "b", "c", "d"]),
            &edges(&[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]),
        )
        .unwrap();
        assert_eq!(transitive_reduce(&diamond).unwrap(), diamond);
    }

    #[test]
    fn reduce_rejects_cycles() {
        let (mut g, _) = build_dag(nodes(&["a", "b"]), &edges(&[("a", "b")])).unwrap();
        g.insert_edge_unchecked(NodeId::new("b"), NodeId::new("a"));
        assert_eq!(transitive_reduce(&g), Err(GraphError::CyclicInput));
    }
}
