//! Edge sets that one device can touch simultaneously.
//!
//! In the plane, Helly's theorem reduces "the stadiums of a set of edges
//! share a point" to conditions on pairs and triples, so the full
//! compatibility structure is captured by two tables: incompatible pairs and
//! pairwise-compatible but jointly incompatible triples.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    epsilon_star_in, segment_distance_in, segment_segment_distance, Ball, Norm, Point, Segment,
    TOL_EPS,
};
use crate::network::Network;

/// Incompatible pairs and triples of edge indices, each sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompatibilityTable {
    pub pairs: BTreeSet<(usize, usize)>,
    pub triples: BTreeSet<(usize, usize, usize)>,
    pub ball: Ball,
    num_edges: usize,
    pair_matrix: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    radius: f64,
    norm: Norm,
    pairs: Vec<[String; 2]>,
    triples: Vec<[String; 3]>,
}

impl IncompatibilityTable {
    pub fn build(net: &Network, ball: &Ball) -> Self {
        let segments = net.segments();
        let pairs = pairwise_incompatible_segments(&segments, ball);
        let triples = triple_incompatible_segments(&segments, ball, &pairs);
        Self::from_parts(segments.len(), *ball, pairs, triples)
    }

    pub(crate) fn from_parts(
        num_edges: usize,
        ball: Ball,
        pairs: BTreeSet<(usize, usize)>,
        triples: BTreeSet<(usize, usize, usize)>,
    ) -> Self {
        let mut pair_matrix = vec![false; num_edges * num_edges];
        for &(a, b) in &pairs {
            pair_matrix[a * num_edges + b] = true;
            pair_matrix[b * num_edges + a] = true;
        }
        IncompatibilityTable {
            pairs,
            triples,
            ball,
            num_edges,
            pair_matrix,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn pair_incompatible(&self, a: usize, b: usize) -> bool {
        self.pair_matrix[a * self.num_edges + b]
    }

    pub fn triple_incompatible(&self, a: usize, b: usize, c: usize) -> bool {
        let mut t = [a, b, c];
        t.sort_unstable();
        self.triples.contains(&(t[0], t[1], t[2]))
    }

    /// Compatibility predicted from the tables alone: no incompatible pair
    /// and no incompatible triple inside `edges`.
    pub fn predicts_compatible(&self, edges: &[usize]) -> bool {
        for (i, &a) in edges.iter().enumerate() {
            for (j, &b) in edges.iter().enumerate().skip(i + 1) {
                if self.pair_incompatible(a, b) {
                    return false;
                }
                for &c in &edges[j + 1..] {
                    if self.triple_incompatible(a, b, c) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Whether `e` can join the already-compatible `cluster`.
    pub fn can_extend(&self, cluster: &[usize], e: usize) -> bool {
        for (i, &a) in cluster.iter().enumerate() {
            if self.pair_incompatible(a, e) {
                return false;
            }
            for &b in &cluster[i + 1..] {
                if self.triple_incompatible(a, b, e) {
                    return false;
                }
            }
        }
        true
    }

    /// `{"pairs": [[e, e']], "triples": [[e1, e2, e3]]}` with edge ids.
    pub fn to_json(&self, net: &Network) -> String {
        let id = |e: usize| net.edges()[e].id.clone();
        let out = TableJson {
            radius: self.ball.radius,
            norm: self.ball.norm,
            pairs: self.pairs.iter().map(|&(a, b)| [id(a), id(b)]).collect(),
            triples: self
                .triples
                .iter()
                .map(|&(a, b, c)| [id(a), id(b), id(c)])
                .collect(),
        };
        serde_json::to_string_pretty(&out).expect("table serializes")
    }
}

/// Minimum distance between two edges in the ball's norm; their stadiums
/// meet iff it is at most `2R`.
fn stadium_gap(s1: &Segment, s2: &Segment, norm: Norm) -> f64 {
    match norm {
        Norm::L2 => {
            segment_segment_distance(s1, s2).unwrap_or_else(|_| segment_distance_in(s1, s2, norm))
        }
        _ => segment_distance_in(s1, s2, norm),
    }
}

/// Pairs whose stadiums are disjoint. Ties within the slack tolerance are
/// kept compatible, matching the triple test.
pub fn pairwise_incompatible(net: &Network, ball: &Ball) -> BTreeSet<(usize, usize)> {
    pairwise_incompatible_segments(&net.segments(), ball)
}

pub(crate) fn pairwise_incompatible_segments(
    segments: &[Segment],
    ball: &Ball,
) -> BTreeSet<(usize, usize)> {
    let n = segments.len();
    let limit = 2.0 * (ball.radius + TOL_EPS);
    (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            (a + 1..n)
                .filter(move |&b| stadium_gap(&segments[a], &segments[b], ball.norm) > limit)
                .map(move |b| (a, b))
        })
        .collect()
}

/// Pairwise-compatible triples whose three stadiums share no point.
pub fn triple_incompatible(
    net: &Network,
    ball: &Ball,
    pairs: &BTreeSet<(usize, usize)>,
) -> BTreeSet<(usize, usize, usize)> {
    triple_incompatible_segments(&net.segments(), ball, pairs)
}

pub(crate) fn triple_incompatible_segments(
    segments: &[Segment],
    ball: &Ball,
    pairs: &BTreeSet<(usize, usize)>,
) -> BTreeSet<(usize, usize, usize)> {
    let n = segments.len();
    let compatible = |a: usize, b: usize| !pairs.contains(&(a.min(b), a.max(b)));
    let mut candidates = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !compatible(a, b) {
                continue;
            }
            for c in b + 1..n {
                if compatible(a, c) && compatible(b, c) {
                    candidates.push((a, b, c));
                }
            }
        }
    }
    candidates
        .into_par_iter()
        .filter(|&(a, b, c)| {
            let trio = [segments[a], segments[b], segments[c]];
            let (eps, _) = epsilon_star_in(&trio, ball.norm, ball.radius).expect("non-empty");
            eps > TOL_EPS
        })
        .collect()
}

/// Whether the stadiums of `edges` share a point, decided directly by the
/// minimax slack; the minimax center is returned as witness when feasible.
pub fn is_compatible_set(edges: &[usize], net: &Network, ball: &Ball) -> (bool, Option<Point>) {
    let segments: Vec<Segment> = edges.iter().map(|&e| net.segment(e)).collect();
    is_compatible_segments(&segments, ball)
}

pub(crate) fn is_compatible_segments(segments: &[Segment], ball: &Ball) -> (bool, Option<Point>) {
    match epsilon_star_in(segments, ball.norm, ball.radius) {
        Ok((eps, center)) if eps <= TOL_EPS => (true, Some(center)),
        Ok(_) => (false, None),
        Err(_) => (true, None),
    }
}
