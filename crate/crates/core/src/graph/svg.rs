//! Static SVG rendering of a laid-out graph.

use std::fmt::Write;

use super::export::GraphDocument;
use super::model::NodeKind;
use super::GraphError;

const SKELETON_FILL: &str = "#c39eff";
const PREREQUISITE_FILL: &str = "#bfbfbf";
const DEFAULT_SIDE: f64 = 20.0;

fn hex_points(cx: f64, cy: f64, side: f64) -> String {
    (0..6)
        .map(|i| {
            let a = (60.0 * i as f64 - 30.0).to_radians();
            format!("{:.2},{:.2}", cx + side * a.cos(), cy + side * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One hexagon per node, arrows for edges between skeleton nodes.
pub fn render_svg(doc: &GraphDocument) -> Result<String, GraphError> {
    let layout = doc.layout.as_ref().ok_or(GraphError::MissingLayout)?;
    let side = if layout.side > 0.0 { layout.side } else { DEFAULT_SIDE };
    for n in doc.graph.nodes() {
        if layout.get(&n.id).is_none() {
            return Err(GraphError::MissingLayout);
        }
    }

    let cells: Vec<_> = doc
        .graph
        .nodes()
        .map(|n| (n, layout.get(&n.id).expect("checked above")))
        .collect();
    let margin = 2.0 * side;
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    if let Some((_, p)) = cells.first() {
        (min_x, min_y, max_x, max_y) = (p.x, p.y, p.x, p.y);
    }
    for (_, p) in &cells {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.2} {:.2} {:.2} {:.2}">"#,
        min_x - margin,
        min_y - margin,
        max_x - min_x + 2.0 * margin,
        max_y - min_y + 2.0 * margin
    );
    out.push_str(
        "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" \
         markerWidth=\"6\" markerHeight=\"6\" orient=\"auto-start-reverse\">\
         <path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"#555\"/></marker></defs>\n",
    );
    let _ = writeln!(
        out,
        "<style>.skeleton{{fill:{SKELETON_FILL}}}.prerequisite{{fill:{PREREQUISITE_FILL}}}\
         polygon{{stroke:#fff;stroke-width:1}}line{{stroke:#555;stroke-width:1.5}}\
         text{{font:{:.1}px sans-serif;text-anchor:middle;dominant-baseline:middle}}</style>",
        side * 0.45
    );

    out.push_str("<g class=\"edges\">\n");
    for (u, v) in doc.graph.edges() {
        let (Some(nu), Some(nv)) = (doc.graph.node(u), doc.graph.node(v)) else {
            continue;
        };
        if !(nu.kind.is_skeleton() && nv.kind.is_skeleton()) {
            continue;
        }
        let (a, b) = (layout.get(u).expect("checked"), layout.get(v).expect("checked"));
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = (dx * dx + dy * dy).sqrt();
        if len <= 2.0 * side {
            continue;
        }
        // start and stop at the hexagon rims
        let (ux, uy) = (dx / len, dy / len);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" marker-end="url(#arrow)" data-from="{}" data-to="{}"/>"#,
            a.x + ux * side,
            a.y + uy * side,
            b.x - ux * side,
            b.y - uy * side,
            escape(u.as_str()),
            escape(v.as_str())
        );
    }
    out.push_str("</g>\n<g class=\"nodes\">\n");
    for (n, p) in &cells {
        let class = if n.kind == NodeKind::Prerequisite {
            "prerequisite"
        } else {
            "skeleton"
        };
        let _ = writeln!(
            out,
            r#"<g data-id="{}" data-kind="{}"><polygon class="{class}" points="{}"/><title>{}</title><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            escape(n.id.as_str()),
            n.kind.as_str(),
            hex_points(p.x, p.y, side),
            escape(&n.name),
            p.x,
            p.y,
            escape(&abbreviate(&n.name)),
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

fn abbreviate(name: &str) -> String {
    const MAX: usize = 10;
    if name.chars().count() <= MAX {
        name.to_string()
    } else {
        let mut s: String = name.chars().take(MAX - 1).collect();
        s.push('…');
        s
    }
}
