//! Static SVG drawing of a network and a placement: stroke width follows the
//! edge weight, covered parts are blue, device centers are red stars inside
//! their coverage balls.

use std::fmt::Write as _;

use netcover::{Network, Norm, Placement, Point};

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 20.0;

struct Frame {
    lo: Point,
    scale: f64,
    height: f64,
}

impl Frame {
    /// Maps model coordinates to pixels with the y axis pointing up.
    fn map(&self, p: Point) -> (f64, f64) {
        (
            MARGIN + (p.x - self.lo.x) * self.scale,
            self.height - MARGIN - (p.y - self.lo.y) * self.scale,
        )
    }
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    (0..10)
        .map(|k| {
            let rad = if k % 2 == 0 { r } else { 0.45 * r };
            let t = std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
            format!("{:.3},{:.3}", cx + rad * t.cos(), cy - rad * t.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render(net: &Network, placement: &Placement) -> String {
    let mut pts: Vec<Point> = net.nodes().iter().map(|n| n.position()).collect();
    for d in &placement.devices {
        let r = d.ball.radius;
        pts.extend([d.position - Point::new(r, r), d.position + Point::new(r, r)]);
    }
    let lo = Point::new(
        pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min),
    );
    let hi = Point::new(
        pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
        pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max),
    );
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let width = (hi.x - lo.x) * scale + 2.0 * MARGIN;
    let height = (hi.y - lo.y) * scale + 2.0 * MARGIN;
    let frame = Frame { lo, scale, height };
    let max_w = net
        .edges()
        .iter()
        .map(|e| e.weight)
        .fold(0.0, f64::max)
        .max(1e-12);
    let stroke = |w: f64| 1.0 + 5.0 * w / max_w;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{width:.3}" height="{height:.3}" fill="#ffffff"/>"##
    );
    let _ = writeln!(s, r#"<g id="balls">"#);
    for d in &placement.devices {
        let (cx, cy) = frame.map(d.position);
        let r = d.ball.radius * scale;
        let style = r##"fill="#e41a1c" fill-opacity="0.15" stroke="#e41a1c" stroke-width="1""##;
        match d.ball.norm {
            Norm::L2 => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" {style}/>"#
                );
            }
            Norm::L1 => {
                let _ = writeln!(
                    s,
                    r#"<polygon points="{:.3},{cy:.3} {cx:.3},{:.3} {:.3},{cy:.3} {cx:.3},{:.3}" {style}/>"#,
                    cx + r,
                    cy - r,
                    cx - r,
                    cy + r
                );
            }
            Norm::LInf => {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" {style}/>"#,
                    cx - r,
                    cy - r,
                    2.0 * r,
                    2.0 * r
                );
            }
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<g id="edges" stroke="#555555" stroke-linecap="round">"##
    );
    for (e, edge) in net.edges().iter().enumerate() {
        let seg = net.segment(e);
        let ((x1, y1), (x2, y2)) = (frame.map(seg.a), frame.map(seg.b));
        let _ = writeln!(
            s,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke-width="{:.3}"/>"#,
            stroke(edge.weight)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<g id="covered" stroke="#1f78b4" stroke-linecap="butt">"##
    );
    for (id, ivs) in placement.per_edge_intervals(net) {
        let e = net.edge_index(&id).expect("known edge");
        let seg = net.segment(e);
        for (lo, hi) in ivs {
            let ((x1, y1), (x2, y2)) = (frame.map(seg.point_at(lo)), frame.map(seg.point_at(hi)));
            let _ = writeln!(
                s,
                r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke-width="{:.3}"/>"#,
                stroke(net.weight(e)) + 1.0
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g id="nodes" fill="#222222">"##);
    for n in net.nodes() {
        let (cx, cy) = frame.map(n.position());
        let _ = writeln!(s, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="2.000"/>"#);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<g id="devices" fill="#e41a1c" stroke="#7f0000" stroke-width="0.5">"##
    );
    for d in &placement.devices {
        let (cx, cy) = frame.map(d.position);
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, star(cx, cy, 7.0));
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use netcover::{Ball, Device, Edge, Node};

    #[test]
    fn contains_every_layer() {
        let net = Network::new(
            vec![
                Node {
                    id: "A".into(),
                    x: 0.0,
                    y: 0.0,
                },
                Node {
                    id: "B".into(),
                    x: 4.0,
                    y: 0.0,
                },
            ],
            vec![Edge {
                id: "e".into(),
                source: "A".into(),
                target: "B".into(),
                weight: 1.0,
            }],
        )
        .unwrap();
        let ball = Ball::euclidean(0.5).unwrap();
        let svg = render(
            &net,
            &Placement::new(vec![Device::new(Point::new(2.0, 0.0), ball)]),
        );
        for id in ["balls", "edges", "covered", "nodes", "devices"] {
            assert!(svg.contains(&format!(r#"<g id="{id}""#)));
        }
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
