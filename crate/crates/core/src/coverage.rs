//! Exact covered weighted length of a placement, computed per edge as the
//! measure of the union of the device intervals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{clip_segment, Ball, Point};
use crate::network::Network;

/// A device: position plus coverage ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub position: Point,
    pub ball: Ball,
}

impl Device {
    pub fn new(position: Point, ball: Ball) -> Self {
        Device { position, ball }
    }
}

/// Parameter range of edge `edge` covered by device `device`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageInterval {
    pub edge: usize,
    pub lo: f64,
    pub hi: f64,
    pub device: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub devices: Vec<Device>,
}

impl Placement {
    pub fn new(devices: Vec<Device>) -> Self {
        Placement { devices }
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    /// Merged covered parameter ranges for every edge touched by at least
    /// one device, keyed by edge id.
    pub fn per_edge_intervals(&self, net: &Network) -> BTreeMap<String, Vec<(f64, f64)>> {
        (0..net.num_edges())
            .filter_map(|e| {
                let raw: Vec<(f64, f64)> = edge_intervals(net, e, &self.devices)
                    .iter()
                    .map(|iv| (iv.lo, iv.hi))
                    .collect();
                (!raw.is_empty()).then(|| (net.edges()[e].id.clone(), merge_intervals(&raw)))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered_weighted_length: f64,
    pub total_weighted_length: f64,
    pub fraction: f64,
    /// Covered (unweighted) length per edge id.
    pub per_edge: BTreeMap<String, f64>,
}

/// One interval per device whose ball meets edge `e`.
pub fn edge_intervals(net: &Network, e: usize, devices: &[Device]) -> Vec<CoverageInterval> {
    let seg = net.segment(e);
    devices
        .iter()
        .enumerate()
        .filter_map(|(j, d)| {
            clip_segment(d.position, &d.ball, &seg).map(|(lo, hi)| CoverageInterval {
                edge: e,
                lo,
                hi,
                device: j,
            })
        })
        .collect()
}

/// Union of closed intervals; touching intervals merge. Output is sorted and
/// disjoint.
pub fn merge_intervals(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = intervals.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (lo, hi) in sorted {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

pub fn measure(intervals: &[(f64, f64)]) -> f64 {
    merge_intervals(intervals)
        .iter()
        .map(|(lo, hi)| hi - lo)
        .sum()
}

/// Covered fraction of edge `e` (in parameter units) by `devices`.
pub fn covered_parameter_length(net: &Network, e: usize, devices: &[Device]) -> f64 {
    let raw: Vec<(f64, f64)> = edge_intervals(net, e, devices)
        .iter()
        .map(|iv| (iv.lo, iv.hi))
        .collect();
    measure(&raw)
}

pub fn covered_weighted_length(net: &Network, devices: &[Device]) -> f64 {
    (0..net.num_edges())
        .map(|e| net.weighted_length(e) * covered_parameter_length(net, e, devices))
        .sum()
}

/// Complement of a sorted disjoint interval list within `[0, 1]`; pieces of
/// zero length are dropped.
pub fn complement_unit(merged: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut cursor = 0.0;
    for &(lo, hi) in merged {
        if lo > cursor {
            out.push((cursor, lo.min(1.0)));
        }
        cursor = cursor.max(hi);
    }
    if cursor < 1.0 {
        out.push((cursor, 1.0));
    }
    out.retain(|(lo, hi)| hi > lo);
    out
}

/// Parameter ranges `(edge, lo, hi)` not covered by any of `devices`.
pub fn uncovered_pieces(net: &Network, devices: &[Device]) -> Vec<(usize, f64, f64)> {
    (0..net.num_edges())
        .flat_map(|e| {
            let raw: Vec<(f64, f64)> = edge_intervals(net, e, devices)
                .iter()
                .map(|iv| (iv.lo, iv.hi))
                .collect();
            complement_unit(&merge_intervals(&raw))
                .into_iter()
                .map(move |(lo, hi)| (e, lo, hi))
        })
        .collect()
}

pub fn evaluate(net: &Network, placement: &Placement) -> CoverageReport {
    let total = net.total_weighted_length();
    let mut covered = 0.0;
    let mut per_edge = BTreeMap::new();
    for e in 0..net.num_edges() {
        let frac = covered_parameter_length(net, e, &placement.devices);
        covered += net.weighted_length(e) * frac;
        per_edge.insert(net.edges()[e].id.clone(), net.length(e) * frac);
    }
    CoverageReport {
        covered_weighted_length: covered,
        total_weighted_length: total,
        fraction: if total > 0.0 {
            (covered / total).min(1.0)
        } else {
            0.0
        },
        per_edge,
    }
}
