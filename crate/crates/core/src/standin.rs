//! Deterministic synthetic networks with the node and edge counts of the six
//! benchmark water networks, for experiments when the originals are not at
//! hand.
//!
//! Construction: random nodes in `[0, 100]²` with a minimum spacing, a
//! Euclidean minimum spanning tree, then either the longest tree edges are
//! dropped (fewer edges than a tree) or the shortest non-crossing chords are
//! added. Weights model pipe diameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::network::{Edge, Network, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandinSpec {
    pub name: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub seed: u64,
}

pub const STANDINS: [StandinSpec; 6] = [
    StandinSpec {
        name: "gessler",
        nodes: 12,
        edges: 14,
        seed: 1,
    },
    StandinSpec {
        name: "jilin",
        nodes: 28,
        edges: 34,
        seed: 2,
    },
    StandinSpec {
        name: "richmond",
        nodes: 48,
        edges: 44,
        seed: 3,
    },
    StandinSpec {
        name: "foss",
        nodes: 37,
        edges: 58,
        seed: 4,
    },
    StandinSpec {
        name: "rural",
        nodes: 48,
        edges: 60,
        seed: 5,
    },
    StandinSpec {
        name: "zj",
        nodes: 60,
        edges: 85,
        seed: 6,
    },
];

const DIAMETERS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
const SIDE: f64 = 100.0;
const MIN_SPACING: f64 = 4.0;
/// Minimum clearance between a new chord and any node it does not end at.
const NODE_CLEARANCE: f64 = 1.0;

pub fn spec(name: &str) -> Option<StandinSpec> {
    STANDINS.iter().find(|s| s.name == name).copied()
}

pub fn generate_named(name: &str) -> Option<Network> {
    spec(name).map(|s| generate(&s))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Proper crossing or collinear overlap of two segments that share no
/// endpoint.
fn segments_conflict(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(a, b, c), orient(a, b, d));
    let (d3, d4) = (orient(c, d, a), orient(c, d, b));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o.abs() < 1e-9
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

fn point_segment_gap(q: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let t = ((q - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    q.distance(a + d * t)
}

/// Builds the stand-in for `spec`. Identical output for identical input.
pub fn generate(spec: &StandinSpec) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + spec.seed);
    let mut pts: Vec<Point> = Vec::with_capacity(spec.nodes);
    while pts.len() < spec.nodes {
        let p = Point::new(rng.gen_range(0.0..SIDE), rng.gen_range(0.0..SIDE));
        if pts.iter().all(|q| q.distance(p) >= MIN_SPACING) {
            pts.push(p);
        }
    }
    let n = pts.len();
    // Prim's algorithm on the complete graph
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(spec.edges);
    best[0] = (0.0, usize::MAX);
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .expect("node left");
        in_tree[u] = true;
        if best[u].1 != usize::MAX {
            pairs.push((best[u].1, u));
        }
        for v in 0..n {
            let d = pts[u].distance(pts[v]);
            if !in_tree[v] && d < best[v].0 {
                best[v] = (d, u);
            }
        }
    }
    let len = |&(a, b): &(usize, usize)| pts[a].distance(pts[b]);
    if spec.edges < pairs.len() {
        pairs.sort_by(|x, y| len(x).total_cmp(&len(y)));
        pairs.truncate(spec.edges);
    } else {
        let mut chords: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                !pairs
                    .iter()
                    .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
            })
            .collect();
        chords.sort_by(|x, y| len(x).total_cmp(&len(y)));
        for (a, b) in chords {
            if pairs.len() >= spec.edges {
                break;
            }
            let crosses = pairs.iter().any(|&(c, d)| {
                let shared = a == c || a == d || b == c || b == d;
                !shared && segments_conflict(pts[a], pts[b], pts[c], pts[d])
            });
            let grazes = (0..n).any(|k| {
                k != a && k != b && point_segment_gap(pts[k], pts[a], pts[b]) < NODE_CLEARANCE
            });
            if !crosses && !grazes {
                pairs.push((a, b));
            }
        }
        assert_eq!(
            pairs.len(),
            spec.edges,
            "not enough planar chords for {}",
            spec.name
        );
    }
    let nodes: Vec<Node> = pts
        .iter()
        .enumerate()
        .map(|(k, p)| Node {
            id: format!("n{k}"),
            x: round3(p.x),
            y: round3(p.y),
        })
        .collect();
    let edges: Vec<Edge> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Edge {
            id: format!("e{k}"),
            source: format!("n{a}"),
            target: format!("n{b}"),
            weight: DIAMETERS[rng.gen_range(0..DIAMETERS.len())],
        })
        .collect();
    Network::new(nodes, edges).expect("generated network is valid")
}

/// Coordinates are stored with three decimals so the JSON files are exact.
fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
