//! SVG pictures of planar configurations and stress graphs.
//!
//! Drawings use the first two coordinates (exact for `d = 2`, a projection
//! otherwise) with the mathematical orientation: the second axis points up.
//! Output is a self-contained `<svg>` string sized in pixels at a fixed
//! scale per unit length.

use crate::geometry::{BoxDomain, Configuration};
use crate::stress::{StressGraph, VertexId};
use std::fmt::Write;

/// Pixels per unit of box length.
const SCALE: f64 = 200.0;
/// Pixel margin around the box on all sides.
const MARGIN: f64 = 12.0;

struct Canvas {
    svg: String,
    height: f64,
}

impl Canvas {
    fn new(domain: &BoxDomain) -> Option<Self> {
        if domain.dim() < 2 {
            return None;
        }
        let w = domain.lengths()[0] * SCALE;
        let h = domain.lengths()[1] * SCALE;
        let mut svg = String::new();
        write!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.1} {:.1} {:.1} {:.1}">"#,
            -MARGIN,
            -MARGIN,
            w + 2.0 * MARGIN,
            h + 2.0 * MARGIN
        )
        .unwrap();
        write!(
            svg,
            r##"<rect x="0" y="0" width="{w:.2}" height="{h:.2}" fill="white" stroke="#333" stroke-width="1.5"/>"##
        )
        .unwrap();
        Some(Canvas { svg, height: h })
    }

    /// Project to pixels, flipping the vertical axis.
    fn at(&self, p: &[f64]) -> (f64, f64) {
        (p[0] * SCALE, self.height - p[1] * SCALE)
    }

    fn circle(&mut self, p: &[f64], radius_px: f64, style: &str) {
        let (cx, cy) = self.at(p);
        write!(
            self.svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{radius_px:.2}" {style}/>"#
        )
        .unwrap();
    }

    fn line(&mut self, a: &[f64], b: &[f64], width_px: f64, color: &str) {
        let (x1, y1) = self.at(a);
        let (x2, y2) = self.at(b);
        write!(
            self.svg,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width_px:.2}" stroke-linecap="round"/>"#
        )
        .unwrap();
    }

    fn label(&mut self, p: &[f64], text: &str) {
        let (x, y) = self.at(p);
        write!(
            self.svg,
            r##"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle" fill="#333">{text}</text>"##,
            y + 4.0
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>");
        self.svg
    }
}

/// Draw a configuration as spheres of the given radius in the box.
/// `None` when the domain has fewer than two axes to draw.
pub fn render_configuration(
    domain: &BoxDomain,
    config: &Configuration,
    r: f64,
) -> Option<String> {
    let mut canvas = Canvas::new(domain)?;
    for i in 0..config.n() {
        let p = config.point(i);
        canvas.circle(
            p,
            r * SCALE,
            r##"fill="#4a90d9" fill-opacity="0.35" stroke="#265681" stroke-width="1.5""##,
        );
        canvas.circle(p, 2.5, r##"fill="#265681""##);
        canvas.label(p, &format!("{}", i + 1));
    }
    Some(canvas.finish())
}

/// Draw a stress graph: sphere outlines at the graph's radius, foot points
/// on the walls, and one line per stressed contact with stroke width
/// proportional to its weight. `None` below two dimensions.
pub fn render_stress_graph(domain: &BoxDomain, graph: &StressGraph) -> Option<String> {
    let mut canvas = Canvas::new(domain)?;
    for v in &graph.internal {
        canvas.circle(
            &v.coords,
            graph.radius * SCALE,
            r##"fill="none" stroke="#999" stroke-width="1" stroke-dasharray="4 3""##,
        );
    }
    let coords = |id: &VertexId| -> &[f64] {
        match id {
            VertexId::Internal(i) => &graph.internal[*i].coords,
            VertexId::Boundary(b) => &graph.boundary[*b].foot,
        }
    };
    let max_weight = graph
        .edges
        .iter()
        .map(|e| e.weight)
        .fold(f64::EPSILON, f64::max);
    for e in &graph.edges {
        let width = 1.0 + 5.0 * e.weight / max_weight;
        canvas.line(coords(&e.a), coords(&e.b), width, "#c0392b");
    }
    for v in &graph.internal {
        canvas.circle(&v.coords, 3.5, r##"fill="#265681""##);
        canvas.label(&v.coords, &format!("{}", v.index + 1));
    }
    for v in &graph.boundary {
        canvas.circle(&v.foot, 3.0, r##"fill="#c0392b""##);
    }
    Some(canvas.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Face;
    use crate::stress::{BoundaryVertex, Component, InternalVertex, StressEdge};

    fn rect() -> BoxDomain {
        BoxDomain::new(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn configuration_svg_shape() {
        let config =
            Configuration::from_rows(vec![vec![0.25, 1.0], vec![0.75, 1.0]]).unwrap();
        let svg = render_configuration(&rect(), &config, 0.25).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        assert!(svg.contains(r#"viewBox="-12.0 -12.0 224.0 424.0""#));
        // one disk and one center dot per sphere
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<text").count(), 2);
    }

    #[test]
    fn low_dimension_is_refused() {
        let line = BoxDomain::new(vec![1.0]).unwrap();
        let config = Configuration::from_rows(vec![vec![0.5]]).unwrap();
        assert!(render_configuration(&line, &config, 0.2).is_none());
    }

    #[test]
    fn stress_svg_edge_widths_follow_weights() {
        let graph = StressGraph {
            internal: vec![
                InternalVertex {
                    index: 0,
                    coords: vec![0.25, 1.0],
                },
                InternalVertex {
                    index: 1,
                    coords: vec![0.75, 1.0],
                },
            ],
            boundary: vec![BoundaryVertex {
                foot: vec![0.0, 1.0],
                face: Face::lo(0),
                touches: 0,
            }],
            edges: vec![
                StressEdge {
                    a: VertexId::Internal(0),
                    b: VertexId::Internal(1),
                    weight: 0.5,
                },
                StressEdge {
                    a: VertexId::Internal(0),
                    b: VertexId::Boundary(0),
                    weight: 0.25,
                },
            ],
            components: vec![Component {
                vertices: vec![
                    VertexId::Internal(0),
                    VertexId::Internal(1),
                    VertexId::Boundary(0),
                ],
                trivial: false,
            }],
            radius: 0.25,
        };
        let svg = render_stress_graph(&rect(), &graph).unwrap();
        assert_eq!(svg.matches("<line").count(), 2);
        // full-weight edge gets the widest stroke, half-weight one less
        assert!(svg.contains(r#"stroke-width="6.00""#));
        assert!(svg.contains(r#"stroke-width="3.50""#));
        assert_eq!(svg.matches(r##"fill="#c0392b""##).count(), 1);
    }
}
