//! Layered placement of the skeleton on a hexagonal lattice.
//!
//! Skeleton nodes (course and association concepts) are assigned to layers by
//! longest path from the sources. Layers become columns, left to right, and
//! nodes within a layer run top to bottom. Prerequisite nodes fill the two
//! hex rings around the skeleton node that owns them.
//!
//! Coordinates are axial `(q, r)` on a pointy-top lattice with screen `y`
//! growing downwards:
//!
//! ```text
//! x = s * sqrt(3) * (q + r / 2)
//! y = s * 3/2 * r
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::model::{DependencyGraph, Indexed, NodeId, NodeKind};
use super::GraphError;

/// Lattice spacing between neighbouring skeleton cells, in hex steps. Two
/// rings of radius 2 around centres 5 steps apart never touch.
pub const SKELETON_SPACING: i32 = 5;
/// Ring 1 holds 6 cells, ring 2 holds 12.
pub const RING_CAPACITY: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hex {
    pub q: i32,
    pub r: i32,
}

impl Hex {
    pub const fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    pub fn scale(self, k: i32) -> Hex {
        Hex::new(self.q * k, self.r * k)
    }

    pub fn distance(self, o: Hex) -> i32 {
        let dq = self.q - o.q;
        let dr = self.r - o.r;
        dq.abs().max(dr.abs()).max((dq + dr).abs())
    }

    pub fn to_pixel(self, side: f64) -> (f64, f64) {
        let q = self.q as f64;
        let r = self.r as f64;
        (side * 3f64.sqrt() * (q + r / 2.0), side * 1.5 * r)
    }
}

impl std::ops::Add for Hex {
    type Output = Hex;

    fn add(self, o: Hex) -> Hex {
        Hex::new(self.q + o.q, self.r + o.r)
    }
}

/// Neighbour directions clockwise on screen, starting east.
pub const DIRECTIONS: [Hex; 6] = [
    Hex::new(1, 0),  // E
    Hex::new(0, 1),  // SE
    Hex::new(-1, 1), // SW
    Hex::new(-1, 0), // W
    Hex::new(0, -1), // NW
    Hex::new(1, -1), // NE
];

/// Cells at distance `radius` from `centre`, clockwise from the east cell.
pub fn ring(centre: Hex, radius: i32) -> Vec<Hex> {
    if radius == 0 {
        return vec![centre];
    }
    let mut cell = centre + DIRECTIONS[0].scale(radius);
    let mut out = Vec::with_capacity(6 * radius as usize);
    // walking SW, W, NW, NE, E, SE traces the ring clockwise from east
    for d in [2, 3, 4, 5, 0, 1] {
        for _ in 0..radius {
            out.push(cell);
            cell = cell + DIRECTIONS[d];
        }
    }
    out
}

/// The 18 cells of rings 1 and 2 in fill order.
pub fn ring_slots(centre: Hex) -> Vec<Hex> {
    let mut slots = ring(centre, 1);
    slots.extend(ring(centre, 2));
    slots
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub q: i32,
    pub r: i32,
    pub x: f64,
    pub y: f64,
    /// Set for skeleton nodes only.
    pub layer: Option<usize>,
}

impl Placement {
    pub fn hex(&self) -> Hex {
        Hex::new(self.q, self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayoutPlacement {
    pub side: f64,
    pub cells: BTreeMap<NodeId, Placement>,
}

impl LayoutPlacement {
    pub fn get(&self, id: &NodeId) -> Option<&Placement> {
        self.cells.get(id)
    }

    pub fn restricted_to(&self, keep: &BTreeSet<NodeId>) -> LayoutPlacement {
        LayoutPlacement {
            side: self.side,
            cells: self
                .cells
                .iter()
                .filter(|(id, _)| keep.contains(*id))
                .map(|(id, p)| (id.clone(), p.clone()))
                .collect(),
        }
    }
}

/// Assigns skeleton nodes to layers by longest path from the sources.
/// Within a layer, nodes are ordered by descending out-degree, then name.
pub fn layered_layout(graph: &DependencyGraph) -> Result<Vec<Vec<NodeId>>, GraphError> {
    let idx = Indexed::restricted(graph, |n| n.kind.is_skeleton());
    let order = idx.toposort().ok_or(GraphError::CyclicInput)?;
    let mut depth = vec![0usize; idx.len()];
    for &u in &order {
        for &v in &idx.succ[u] {
            depth[v] = depth[v].max(depth[u] + 1);
        }
    }
    let layer_count = depth.iter().max().map_or(0, |d| d + 1);
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); layer_count];
    for (i, &d) in depth.iter().enumerate() {
        layers[d].push(i);
    }
    let name = |i: usize| graph.node(&idx.ids[i]).map(|n| n.name.as_str()).unwrap_or("");
    Ok(layers
        .into_iter()
        .map(|mut layer| {
            layer.sort_by(|&a, &b| {
                idx.succ[b]
                    .len()
                    .cmp(&idx.succ[a].len())
                    .then_with(|| name(a).cmp(name(b)))
            });
            layer.into_iter().map(|i| idx.ids[i].clone()).collect()
        })
        .collect())
}

/// Lattice cell of the `index`-th node in `layer`. Columns are vertical up to
/// a half-cell zigzag; any two distinct slots are at least
/// [`SKELETON_SPACING`] hex steps apart.
pub fn skeleton_cell(layer: usize, index: usize) -> Hex {
    let r = SKELETON_SPACING * index as i32;
    let q = SKELETON_SPACING * layer as i32 - r.div_euclid(2);
    Hex::new(q, r)
}

/// Prerequisite nodes adjacent (in either direction) to a skeleton node,
/// ordered by name.
pub fn prerequisite_neighbours(graph: &DependencyGraph, id: &NodeId) -> Vec<NodeId> {
    let mut out: Vec<&NodeId> = graph
        .edges()
        .filter_map(|(u, v)| {
            if u == id {
                Some(v)
            } else if v == id {
                Some(u)
            } else {
                None
            }
        })
        .filter(|n| graph.node(n).is_some_and(|c| c.kind == NodeKind::Prerequisite))
        .collect();
    out.sort_by(|a, b| {
        let na = graph.node(a).map(|n| n.name.as_str());
        let nb = graph.node(b).map(|n| n.name.as_str());
        na.cmp(&nb).then(a.cmp(b))
    });
    out.dedup();
    out.into_iter().cloned().collect()
}

/// Places skeleton nodes on the lattice and prerequisite nodes in the rings
/// around them.
///
/// A prerequisite shared by several skeleton nodes is placed once, in the
/// ring region of the first skeleton node (in layer order) that references
/// it. Rings fill clockwise from the east cell, ring 1 before ring 2.
pub fn hex_layout(
    layers: &[Vec<NodeId>],
    graph: &DependencyGraph,
    side: f64,
) -> Result<LayoutPlacement, GraphError> {
    let mut neighbours = Vec::new();
    for (l, layer) in layers.iter().enumerate() {
        for (i, id) in layer.iter().enumerate() {
            let prereqs = prerequisite_neighbours(graph, id);
            if prereqs.len() > RING_CAPACITY {
                return Err(GraphError::RingOverflow {
                    node: id.clone(),
                    count: prereqs.len(),
                });
            }
            neighbours.push((l, i, id, prereqs));
        }
    }

    let mut cells = BTreeMap::new();
    let mut place = |id: &NodeId, hex: Hex, layer: Option<usize>| {
        let (x, y) = hex.to_pixel(side);
        cells.insert(
            id.clone(),
            Placement {
                q: hex.q,
                r: hex.r,
                x,
                y,
                layer,
            },
        );
    };
    let mut owned: BTreeSet<NodeId> = BTreeSet::new();
    for (l, i, id, prereqs) in &neighbours {
        let centre = skeleton_cell(*l, *i);
        place(id, centre, Some(*l));
        let mut slots = ring_slots(centre).into_iter();
        for p in prereqs {
            if owned.insert(p.clone()) {
                let cell = slots.next().expect("ring capacity checked above");
                place(p, cell, None);
            }
        }
    }

    if let Some(orphan) = graph
        .nodes()
        .find(|n| n.kind == NodeKind::Prerequisite && !owned.contains(&n.id))
    {
        return Err(GraphError::DetachedPrerequisite(orphan.id.clone()));
    }
    Ok(LayoutPlacement { side, cells })
}
