//! Embedded weighted networks: JSON loading, validation, and scaling.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Segment, DEGENERATE_LENGTH};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("edge `{edge}` references unknown node `{node}`")]
    DanglingEndpoint { edge: String, node: String },
    #[error("edge `{0}` has zero length")]
    ZeroLengthEdge(String),
    #[error("node `{0}` has non-finite coordinates")]
    NonFiniteCoordinate(String),
    #[error("edge `{edge}` has invalid weight {weight}")]
    InvalidWeight { edge: String, weight: f64 },
    #[error("network has zero total weighted length")]
    ZeroTotalLength,
    #[error("degenerate network: all nodes coincide")]
    Degenerate,
    #[error("scale radius must be positive, got {0}")]
    InvalidRadius(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Deserialize, Serialize)]
struct NetworkFile {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// Input formats understood by [`Network::load`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkFormat {
    Json,
}

/// A validated planar network. Immutable once built.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    endpoints: Vec<(usize, usize)>,
}

impl Network {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, NetworkError> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if !node.position().is_finite() {
                return Err(NetworkError::NonFiniteCoordinate(node.id.clone()));
            }
            if index.insert(node.id.as_str(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "node",
                    id: node.id.clone(),
                });
            }
        }
        let mut edge_ids = HashMap::with_capacity(edges.len());
        let mut endpoints = Vec::with_capacity(edges.len());
        for edge in &edges {
            if edge_ids.insert(edge.id.as_str(), ()).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "edge",
                    id: edge.id.clone(),
                });
            }
            let lookup = |node: &str| {
                index
                    .get(node)
                    .copied()
                    .ok_or_else(|| NetworkError::DanglingEndpoint {
                        edge: edge.id.clone(),
                        node: node.to_string(),
                    })
            };
            let (o, f) = (lookup(&edge.source)?, lookup(&edge.target)?);
            if !(edge.weight >= 0.0 && edge.weight.is_finite()) {
                return Err(NetworkError::InvalidWeight {
                    edge: edge.id.clone(),
                    weight: edge.weight,
                });
            }
            if nodes[o].position().distance(nodes[f].position()) <= DEGENERATE_LENGTH {
                return Err(NetworkError::ZeroLengthEdge(edge.id.clone()));
            }
            endpoints.push((o, f));
        }
        let net = Network {
            nodes,
            edges,
            endpoints,
        };
        if !edges_present_with_weight(&net) {
            return Err(NetworkError::ZeroTotalLength);
        }
        Ok(net)
    }

    pub fn load(path: impl AsRef<Path>, format: NetworkFormat) -> Result<Self, NetworkError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        match format {
            NetworkFormat::Json => Network::from_json(&text),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_str(text)?;
        Network::new(file.nodes, file.edges)
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Segment `o_e → f_e` of edge `e`.
    pub fn segment(&self, e: usize) -> Segment {
        let (o, f) = self.endpoints[e];
        Segment::new(self.nodes[o].position(), self.nodes[f].position())
    }

    pub fn segments(&self) -> Vec<Segment> {
        (0..self.edges.len()).map(|e| self.segment(e)).collect()
    }

    pub fn length(&self, e: usize) -> f64 {
        self.segment(e).length()
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.edges[e].weight
    }

    /// `ω_e L_e`.
    pub fn weighted_length(&self, e: usize) -> f64 {
        self.weight(e) * self.length(e)
    }

    /// Point at parameter `λ` on edge `e`: `o_e + λ (f_e - o_e)`.
    pub fn point_on_edge(&self, e: usize, lambda: f64) -> Point {
        self.segment(e).point_at(lambda)
    }

    pub fn total_weighted_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.weighted_length(e)).sum()
    }

    /// Largest Euclidean distance between two nodes that are edge endpoints.
    pub fn endpoint_diameter(&self) -> f64 {
        let pts: Vec<Point> = self
            .endpoints
            .iter()
            .flat_map(|&(o, f)| [self.nodes[o].position(), self.nodes[f].position()])
            .collect();
        let mut diam: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                diam = diam.max(a.distance(*b));
            }
        }
        diam
    }

    /// Axis-aligned bounding box of all nodes, `(min, max)`.
    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(self.nodes.iter().map(Node::position))
    }

    /// Translate so that the smallest enclosing circle of the nodes is
    /// centered at the origin, then scale uniformly so the farthest node is at
    /// distance `target_radius`. Weights are unchanged.
    pub fn scale_to_disk(&self, target_radius: f64) -> Result<Network, NetworkError> {
        Ok(self.scale_to_disk_with_factor(target_radius)?.0)
    }

    /// [`Network::scale_to_disk`] also returning the applied scale factor.
    pub fn scale_to_disk_with_factor(
        &self,
        target_radius: f64,
    ) -> Result<(Network, f64), NetworkError> {
        if !(target_radius > 0.0 && target_radius.is_finite()) {
            return Err(NetworkError::InvalidRadius(target_radius));
        }
        let pts: Vec<Point> = self.nodes.iter().map(Node::position).collect();
        let (center, _) = min_enclosing_circle(&pts);
        let max_norm = pts.iter().map(|p| p.distance(center)).fold(0.0, f64::max);
        if max_norm <= DEGENERATE_LENGTH {
            return Err(NetworkError::Degenerate);
        }
        let factor = target_radius / max_norm;
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let q = (n.position() - center) * factor;
                Node {
                    id: n.id.clone(),
                    x: q.x,
                    y: q.y,
                }
            })
            .collect();
        let net = Network {
            nodes,
            edges: self.edges.clone(),
            endpoints: self.endpoints.clone(),
        };
        Ok((net, factor))
    }
}

fn edges_present_with_weight(net: &Network) -> bool {
    net.total_weighted_length() > 0.0
}

pub(crate) fn bounding_box(points: impl IntoIterator<Item = Point>) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min = Point::new(min.x.min(p.x), min.y.min(p.y));
        max = Point::new(max.x.max(p.x), max.y.max(p.y));
    }
    (min, max)
}

/// Smallest enclosing circle (incremental Welzl), `(center, radius)`.
pub fn min_enclosing_circle(points: &[Point]) -> (Point, f64) {
    let Some(&first) = points.first() else {
        return (Point::default(), 0.0);
    };
    let outside = |c: Point, r: f64, q: Point| q.distance(c) > r * (1.0 + 1e-14) + 1e-300;
    let (mut c, mut r) = (first, 0.0);
    for i in 1..points.len() {
        if !outside(c, r, points[i]) {
            continue;
        }
        c = points[i];
        r = 0.0;
        for j in 0..i {
            if !outside(c, r, points[j]) {
                continue;
            }
            c = points[i].midpoint(points[j]);
            r = points[i].distance(c);
            for k in 0..j {
                if outside(c, r, points[k]) {
                    (c, r) = circle_through(points[i], points[j], points[k]);
                }
            }
        }
    }
    (c, r)
}

fn circle_through(a: Point, b: Point, c: Point) -> (Point, f64) {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d.abs() <= 1e-14 * ab.norm() * ac.norm() {
        // collinear: the circle on the farthest pair
        let pairs = [(a, b), (a, c), (b, c)];
        let (p, q) = pairs
            .into_iter()
            .max_by(|x, y| x.0.distance(x.1).total_cmp(&y.0.distance(y.1)))
            .unwrap();
        let m = p.midpoint(q);
        return (m, p.distance(m));
    }
    let ab2 = ab.dot(ab);
    let ac2 = ac.dot(ac);
    let ux = (ac.y * ab2 - ab.y * ac2) / d;
    let uy = (ab.x * ac2 - ac.x * ab2) / d;
    let center = a + Point::new(ux, uy);
    let r = [a, b, c]
        .iter()
        .map(|p| p.distance(center))
        .fold(0.0, f64::max);
    (center, r)
}
