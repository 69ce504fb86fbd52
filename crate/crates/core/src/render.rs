//! Figures: Graphviz DOT for files, and a radial SVG for the browser demo.
//!
//! Colours follow the usual convention for these pictures: `+` spins red,
//! `-` spins black, edges of `D` blue, highlighted edges green.

use std::f64::consts::TAU;
use std::fmt::Write;

use crate::dsets::EdgeSet;
use crate::groundstate::SpinConfig;
use crate::tree::{Tree, VertexId};

const PLUS: &str = "red";
const MINUS: &str = "black";
const D_EDGE: &str = "blue";
const HIGHLIGHT: &str = "green";

fn address_label(tree: &Tree, v: VertexId) -> String {
    let a = tree.address(v);
    if a.is_empty() {
        "root".into()
    } else {
        a.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// DOT graph of `sigma` with `d` (and optionally `highlight`) coloured.
pub fn render_config(tree: &Tree, sigma: &SpinConfig, d: &EdgeSet, highlight: Option<&EdgeSet>) -> String {
    let mut out = String::new();
    let spec = tree.spec();
    let _ = writeln!(out, "graph cayley_k{}_r{} {{", spec.k, spec.depth);
    out.push_str("  graph [layout=twopi, root=v0, overlap=false];\n");
    out.push_str("  node [shape=circle, style=filled, label=\"\", width=0.15];\n");
    for v in tree.vertices() {
        let color = if sigma.spin(v) > 0 { PLUS } else { MINUS };
        let _ = writeln!(
            out,
            "  v{} [fillcolor={color}, color={color}, tooltip=\"{}\"];",
            v.raw(),
            address_label(tree, v)
        );
    }
    for e in tree.edges() {
        let (p, c) = tree.edge_endpoints(e);
        let attrs = if highlight.is_some_and(|h| h.contains(e)) {
            format!(" [color={HIGHLIGHT}, penwidth=2.5]")
        } else if d.contains(e) {
            format!(" [color={D_EDGE}, penwidth=2.5]")
        } else {
            String::new()
        };
        let _ = writeln!(out, "  v{} -- v{}{attrs};", p.raw(), c.raw());
    }
    out.push_str("}\n");
    out
}

/// Radial layout: generation `g` on a circle of radius `g`, each vertex
/// centred in the angular wedge of its subtree.
pub fn radial_layout(tree: &Tree) -> Vec<(f64, f64)> {
    let mut wedge = vec![(0.0f64, TAU); tree.vertex_count()];
    let mut pos = vec![(0.0, 0.0); tree.vertex_count()];
    for v in tree.vertices() {
        let (start, end) = wedge[v.index()];
        let g = f64::from(tree.generation(v));
        let mid = (start + end) / 2.0;
        pos[v.index()] = if g == 0.0 { (0.0, 0.0) } else { (g * mid.cos(), g * mid.sin()) };
        let kids: Vec<VertexId> = tree.children(v).collect();
        let step = (end - start) / kids.len().max(1) as f64;
        for (i, c) in kids.into_iter().enumerate() {
            let a = start + step * i as f64;
            wedge[c.index()] = (a, a + step);
        }
    }
    pos
}

/// Self-contained SVG of `sigma` using [`radial_layout`].
pub fn render_svg(tree: &Tree, sigma: &SpinConfig, d: &EdgeSet, highlight: Option<&EdgeSet>, size: f64) -> String {
    let pos = radial_layout(tree);
    let depth = f64::from(tree.depth().max(1));
    let scale = size / 2.0 / (depth + 0.5);
    let at = |v: VertexId| {
        let (x, y) = pos[v.index()];
        (size / 2.0 + x * scale, size / 2.0 + y * scale)
    };
    let n = tree.vertex_count() as f64;
    let radius = (scale * 0.18).min(size / n.sqrt() / 4.0).max(1.0);

    let mut out = String::new();
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {size} {size}\" width=\"{size}\" height=\"{size}\">"
    );
    for e in tree.edges() {
        let (p, c) = tree.edge_endpoints(e);
        let ((x1, y1), (x2, y2)) = (at(p), at(c));
        let (color, width) = if highlight.is_some_and(|h| h.contains(e)) {
            (HIGHLIGHT, 2.5)
        } else if d.contains(e) {
            (D_EDGE, 2.5)
        } else {
            ("#bbbbbb", 0.8)
        };
        let _ = write!(
            out,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-width=\"{width}\"/>"
        );
    }
    for v in tree.vertices() {
        let (x, y) = at(v);
        let color = if sigma.spin(v) > 0 { PLUS } else { MINUS };
        let _ = write!(
            out,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius:.2}\" fill=\"{color}\"><title>{}</title></circle>",
            address_label(tree, v)
        );
    }
    out.push_str("</svg>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsets::{gen_dimer_cover, gen_secondary_dimer};
    use crate::groundstate::{build_sigma, Sign};
    use crate::tree::{build_ball, TreeSpec};

    #[test]
    fn empty_set_is_all_red_and_uncoloured() {
        let t = build_ball(TreeSpec::new(2, 3)).unwrap();
        let d = EdgeSet::empty(&t);
        let dot = render_config(&t, &build_sigma(&t, &d, Sign::Plus).unwrap(), &d, None);
        assert_eq!(dot.matches("fillcolor=red").count(), t.vertex_count());
        assert!(!dot.contains("fillcolor=black"));
        assert!(!dot.contains("color=blue") && !dot.contains("color=green"));
        assert_eq!(dot.matches(" -- ").count(), t.edge_count());
    }

    #[test]
    fn dimer_figure_has_both_spin_colours_and_blue_bonds() {
        let t = build_ball(TreeSpec::new(4, 4)).unwrap();
        let d = gen_dimer_cover(&t, 0);
        let sigma = build_sigma(&t, &d, Sign::Plus).unwrap();
        let dot = render_config(&t, &sigma, &d, None);
        assert_eq!(dot.matches("[color=blue").count(), d.len());
        assert!(dot.contains("fillcolor=black") && dot.contains("fillcolor=red"));
        assert_eq!(dot, render_config(&t, &sigma, &d, None));

        let sec = gen_secondary_dimer(&t, &d, 0).unwrap();
        let dot = render_config(&t, &sigma, &d, Some(&sec));
        assert_eq!(dot.matches("[color=green").count(), sec.len());
        assert_eq!(dot.matches("[color=blue").count(), d.len());
    }

    #[test]
    fn svg_counts() {
        let t = build_ball(TreeSpec::new(3, 3)).unwrap();
        let d = gen_dimer_cover(&t, 0);
        let sigma = build_sigma(&t, &d, Sign::Plus).unwrap();
        let svg = render_svg(&t, &sigma, &d, None, 400.0);
        assert_eq!(svg.matches("<circle").count(), t.vertex_count());
        assert_eq!(svg.matches("<line").count(), t.edge_count());
        let pos = radial_layout(&t);
        for v in t.vertices() {
            let (x, y) = pos[v.index()];
            assert!(((x * x + y * y).sqrt() - f64::from(t.generation(v))).abs() < 1e-9);
        }
    }
}
