//! Multi-device solvers.
//!
//! The main one is a sequential heuristic: place the best single device on
//! what is still uncovered, cut the covered window out of every touched
//! edge, repeat. Node- and edge-restricted greedy baselines and a
//! seed-then-polish pipeline share the same dispatch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compatibility::IncompatibilityTable;
use crate::coverage::{
    covered_weighted_length, evaluate, measure, CoverageReport, Device, Placement,
};
use crate::geometry::{clip_segment, Ball, Point};
use crate::ilp_seed::{seed_to_placement, solve_seed_ilp, SeedError, SeedMode};
use crate::network::Network;
use crate::single_device::{solve_single_on, SingleSolution, SolverConfig, WeightedSegment};

/// An iteration covering less new weighted length than this is a stall.
pub const MIN_PROGRESS: f64 = 1e-9;
/// Live pieces shorter than this (absolute length) are discarded.
const MIN_PIECE_LENGTH: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("problem mnlclp requires the number of devices p")]
    MissingP,
    #[error("problem psnlclp requires the coverage fraction gamma")]
    MissingGamma,
    #[error("gamma must lie in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("iteration {iteration} covered {new_coverage:e} new weighted length (covered {covered} of target {target})")]
    Stalled {
        iteration: usize,
        new_coverage: f64,
        covered: f64,
        target: f64,
    },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Seed(#[from] SeedError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Mnlclp,
    Psnlclp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Heuristic,
    SeedPolish,
    BaselineNodes,
    BaselineEdges,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    Nodes,
    Edges,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: Problem,
    pub p: Option<usize>,
    pub gamma: Option<f64>,
    pub ball: Ball,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Candidate spacing along edges for the edge baseline; `R/4` if unset.
    #[serde(default)]
    pub edge_grid_step: Option<f64>,
}

impl RunConfig {
    pub fn mnlclp(p: usize, ball: Ball) -> Self {
        RunConfig {
            problem: Problem::Mnlclp,
            p: Some(p),
            gamma: None,
            ball,
            solver: SolverConfig::default(),
            edge_grid_step: None,
        }
    }

    pub fn psnlclp(gamma: f64, ball: Ball) -> Self {
        RunConfig {
            problem: Problem::Psnlclp,
            p: None,
            gamma: Some(gamma),
            ball,
            solver: SolverConfig::default(),
            edge_grid_step: None,
        }
    }

    fn require_p(&self) -> Result<usize, PlacementError> {
        self.p.ok_or(PlacementError::MissingP)
    }

    fn require_gamma(&self) -> Result<f64, PlacementError> {
        let g = self.gamma.ok_or(PlacementError::MissingGamma)?;
        check_gamma(g)?;
        Ok(g)
    }
}

fn check_gamma(gamma: f64) -> Result<(), PlacementError> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(PlacementError::InvalidGamma(gamma))
    }
}

/// Uncovered part `[a, b]` of an original edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LivePiece {
    pub edge: usize,
    pub a: f64,
    pub b: f64,
    pub weight: f64,
}

/// The network minus everything covered so far. Pieces of one edge are
/// disjoint.
#[derive(Clone, Debug)]
pub struct TrimmedNetwork<'a> {
    base: &'a Network,
    pieces: Vec<LivePiece>,
}

impl<'a> TrimmedNetwork<'a> {
    pub fn new(base: &'a Network) -> Self {
        let pieces = (0..base.num_edges())
            .map(|e| LivePiece {
                edge: e,
                a: 0.0,
                b: 1.0,
                weight: base.weight(e),
            })
            .collect();
        TrimmedNetwork { base, pieces }
    }

    pub fn pieces(&self) -> &[LivePiece] {
        &self.pieces
    }

    pub fn live_weighted_length(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.weight * self.base.length(p.edge) * (p.b - p.a))
            .sum()
    }

    pub fn segments(&self) -> Vec<WeightedSegment> {
        self.pieces
            .iter()
            .map(|p| WeightedSegment {
                segment: self.base.segment(p.edge).sub_segment(p.a, p.b),
                weight: p.weight,
            })
            .collect()
    }

    /// Removes the windows of `sol` (indexed like [`Self::segments`]).
    pub fn trim(&mut self, sol: &SingleSolution) {
        let mut next = Vec::with_capacity(self.pieces.len() + sol.per_edge_lambdas.len());
        for (i, piece) in self.pieces.iter().enumerate() {
            let Some(&(l0, l1)) = sol.per_edge_lambdas.get(&i).filter(|(l0, l1)| l1 > l0) else {
                next.push(*piece);
                continue;
            };
            let span = piece.b - piece.a;
            if l0 > 0.0 {
                next.push(LivePiece {
                    b: piece.a + l0 * span,
                    ..*piece
                });
            }
            if l1 < 1.0 {
                next.push(LivePiece {
                    a: piece.a + l1 * span,
                    ..*piece
                });
            }
        }
        let base = self.base;
        next.retain(|p| (p.b - p.a) * base.length(p.edge) > MIN_PIECE_LENGTH);
        self.pieces = next;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub position: Point,
    pub new_coverage: f64,
    pub cumulative: f64,
    pub live_weighted_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRun {
    pub placement: Placement,
    pub trace: Vec<IterationRecord>,
}

/// The sequential heuristic. For the partial cover, devices made redundant
/// by later ones are dropped, and when more than [`p_upper_bound`] devices
/// remain the per-edge window cover behind that bound is returned instead.
pub fn math_heuristic(net: &Network, cfg: &RunConfig) -> Result<Placement, PlacementError> {
    let placement = math_heuristic_traced(net, cfg)?.placement;
    if cfg.problem == Problem::Mnlclp {
        return Ok(placement);
    }
    let gamma = cfg.require_gamma()?;
    let target = gamma * net.total_weighted_length() - 1e-9 * net.total_weighted_length();
    let pruned = prune_redundant(net, placement, target);
    let windows = window_cover(net, &cfg.ball, gamma)?;
    if pruned.len() > windows.len() {
        log::info!(
            "window cover uses {} devices, heuristic {}; keeping the window cover",
            windows.len(),
            pruned.len()
        );
        return Ok(windows);
    }
    Ok(pruned)
}

/// Removes devices, latest first, while the rest still cover `target`.
fn prune_redundant(net: &Network, mut placement: Placement, target: f64) -> Placement {
    for j in (0..placement.devices.len()).rev() {
        let mut rest = placement.devices.clone();
        rest.remove(j);
        if covered_weighted_length(net, &rest) >= target {
            placement.devices = rest;
        }
    }
    placement
}

/// The sequential heuristic with a per-iteration record of coverage and
/// remaining live weight.
pub fn math_heuristic_traced(
    net: &Network,
    cfg: &RunConfig,
) -> Result<HeuristicRun, PlacementError> {
    let total = net.total_weighted_length();
    let (max_devices, target) = match cfg.problem {
        Problem::Mnlclp => (cfg.require_p()?, f64::INFINITY),
        Problem::Psnlclp => {
            let gamma = cfg.require_gamma()?;
            (usize::MAX, gamma * total - 1e-9 * total)
        }
    };
    let mut live = TrimmedNetwork::new(net);
    let mut devices = Vec::new();
    let mut trace = Vec::new();
    let mut cumulative = 0.0;
    while devices.len() < max_devices && cumulative < target {
        let iteration = devices.len();
        let solver = SolverConfig {
            rng_seed: cfg.solver.rng_seed.wrapping_add(iteration as u64),
            ..cfg.solver.clone()
        };
        let sol = solve_single_on(&live.segments(), &cfg.ball, &solver);
        if sol.objective < MIN_PROGRESS {
            if cfg.problem == Problem::Psnlclp {
                return Err(PlacementError::Stalled {
                    iteration,
                    new_coverage: sol.objective,
                    covered: cumulative,
                    target,
                });
            }
            log::warn!("no uncovered weight reachable after {iteration} devices; stopping early");
            break;
        }
        live.trim(&sol);
        cumulative += sol.objective;
        devices.push(Device::new(sol.position, cfg.ball));
        trace.push(IterationRecord {
            position: sol.position,
            new_coverage: sol.objective,
            cumulative,
            live_weighted_length: live.live_weighted_length(),
        });
    }
    Ok(HeuristicRun {
        placement: Placement::new(devices),
        trace,
    })
}

/// Shortest chord of the ball through its center along direction `u` (unit).
fn chord(ball: &Ball, u: Point) -> f64 {
    2.0 * ball.radius / u.norm_in(ball.norm)
}

/// Heaviest edges by `ω L` forming the shortest prefix with at least a `γ`
/// share of the weighted length.
fn heavy_prefix(net: &Network, gamma: f64) -> Vec<usize> {
    let total = net.total_weighted_length();
    let mut order: Vec<usize> = (0..net.num_edges()).collect();
    order.sort_by(|&a, &b| {
        net.weighted_length(b)
            .total_cmp(&net.weighted_length(a))
            .then(a.cmp(&b))
    });
    let goal = gamma * total - 1e-12 * total;
    let mut acc = 0.0;
    let mut prefix = Vec::new();
    for e in order {
        if acc >= goal {
            break;
        }
        acc += net.weighted_length(e);
        prefix.push(e);
    }
    prefix
}

/// Equal windows no longer than the chord, so a ball centered in each
/// window covers it.
fn window_count(net: &Network, ball: &Ball, e: usize) -> usize {
    let seg = net.segment(e);
    let u = seg.direction() * (1.0 / seg.length());
    (seg.length() / chord(ball, u) - 1e-12).ceil().max(1.0) as usize
}

/// Devices sufficient to cover the heaviest edges making up a `γ` share of
/// the weighted length, each edge covered by consecutive windows.
pub fn p_upper_bound(net: &Network, ball: &Ball, gamma: f64) -> Result<usize, PlacementError> {
    check_gamma(gamma)?;
    Ok(heavy_prefix(net, gamma)
        .into_iter()
        .map(|e| window_count(net, ball, e))
        .sum())
}

/// The cover counted by [`p_upper_bound`]: one device at the middle of each
/// window of each edge in the heavy prefix.
pub fn window_cover(net: &Network, ball: &Ball, gamma: f64) -> Result<Placement, PlacementError> {
    check_gamma(gamma)?;
    let mut devices = Vec::new();
    for e in heavy_prefix(net, gamma) {
        let k = window_count(net, ball, e);
        let seg = net.segment(e);
        devices
            .extend((0..k).map(|i| Device::new(seg.point_at((i as f64 + 0.5) / k as f64), *ball)));
    }
    Ok(Placement::new(devices))
}

/// Candidate positions for the restricted baselines.
pub fn baseline_candidates(
    net: &Network,
    ball: &Ball,
    mode: BaselineMode,
    grid_step: Option<f64>,
) -> Vec<Point> {
    let mut points: Vec<Point> = match mode {
        BaselineMode::Nodes => net.nodes().iter().map(|n| n.position()).collect(),
        BaselineMode::Edges => {
            let step = grid_step.unwrap_or(ball.radius / 4.0);
            let mut out: Vec<Point> = net.nodes().iter().map(|n| n.position()).collect();
            for e in 0..net.num_edges() {
                let seg = net.segment(e);
                let k = (seg.length() / step).ceil().max(1.0) as usize;
                out.extend((1..k).map(|i| seg.point_at(i as f64 / k as f64)));
            }
            out
        }
    };
    let mut seen = std::collections::HashSet::new();
    points.retain(|p| seen.insert((p.x.to_bits(), p.y.to_bits())));
    points
}

/// Greedy maximal coverage over fixed candidates followed by 1-swap descent.
pub fn restricted_baseline(
    net: &Network,
    cfg: &RunConfig,
    mode: BaselineMode,
) -> Result<Placement, PlacementError> {
    let p = cfg.require_p()?;
    let candidates = baseline_candidates(net, &cfg.ball, mode, cfg.edge_grid_step);
    let chosen = select_candidates(net, &cfg.ball, &candidates, p);
    Ok(Placement::new(
        chosen
            .into_iter()
            .map(|c| Device::new(candidates[c], cfg.ball))
            .collect(),
    ))
}

/// Indices of at most `p` candidates; ties go to the lowest index.
pub(crate) fn select_candidates(
    net: &Network,
    ball: &Ball,
    candidates: &[Point],
    p: usize,
) -> Vec<usize> {
    let segments = net.segments();
    let intervals: Vec<Vec<(usize, f64, f64)>> = candidates
        .iter()
        .map(|&x| {
            segments
                .iter()
                .enumerate()
                .filter_map(|(e, s)| clip_segment(x, ball, s).map(|(lo, hi)| (e, lo, hi)))
                .collect()
        })
        .collect();
    let weights: Vec<f64> = (0..net.num_edges())
        .map(|e| net.weighted_length(e))
        .collect();
    let mut state = SelectionState {
        per_edge: vec![Vec::new(); net.num_edges()],
        weights: &weights,
    };
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..p {
        let mut best: Option<(usize, f64)> = None;
        for (c, ivs) in intervals.iter().enumerate() {
            if chosen.contains(&c) {
                continue;
            }
            let gain = state.delta(&[], ivs);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((c, gain));
            }
        }
        match best {
            Some((c, gain)) if gain > 0.0 => {
                state.add(&intervals[c]);
                chosen.push(c);
            }
            _ => break,
        }
    }
    let scale = weights.iter().sum::<f64>().max(1.0);
    for _ in 0..50 {
        let mut improved = false;
        for slot in 0..chosen.len() {
            let out = chosen[slot];
            let mut best: Option<(usize, f64)> = None;
            for (c, ivs) in intervals.iter().enumerate() {
                if chosen.contains(&c) {
                    continue;
                }
                let delta = state.delta(&intervals[out], ivs);
                if delta > 1e-12 * scale && best.is_none_or(|(_, d)| delta > d) {
                    best = Some((c, delta));
                }
            }
            if let Some((c, _)) = best {
                state.remove(&intervals[out]);
                state.add(&intervals[c]);
                chosen[slot] = c;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    chosen
}

struct SelectionState<'a> {
    per_edge: Vec<Vec<(f64, f64)>>,
    weights: &'a [f64],
}

impl SelectionState<'_> {
    fn add(&mut self, ivs: &[(usize, f64, f64)]) {
        for &(e, lo, hi) in ivs {
            self.per_edge[e].push((lo, hi));
        }
    }

    fn remove(&mut self, ivs: &[(usize, f64, f64)]) {
        for &(e, lo, hi) in ivs {
            let pos = self.per_edge[e]
                .iter()
                .position(|&iv| iv == (lo, hi))
                .expect("interval present");
            self.per_edge[e].swap_remove(pos);
        }
    }

    /// Coverage change from dropping `out` and adding `inn`.
    fn delta(&self, out: &[(usize, f64, f64)], inn: &[(usize, f64, f64)]) -> f64 {
        let mut edges: Vec<usize> = out.iter().chain(inn).map(|iv| iv.0).collect();
        edges.sort_unstable();
        edges.dedup();
        edges
            .into_iter()
            .map(|e| {
                let before = &self.per_edge[e];
                let mut after = before.clone();
                for &(f, lo, hi) in out {
                    if f == e {
                        let pos = after
                            .iter()
                            .position(|&iv| iv == (lo, hi))
                            .expect("interval present");
                        after.swap_remove(pos);
                    }
                }
                after.extend(inn.iter().filter(|iv| iv.0 == e).map(|iv| (iv.1, iv.2)));
                self.weights[e] * (measure(&after) - measure(before))
            })
            .sum()
    }
}

/// Seed clusters, then improve each device in turn by a full multistart on
/// the weight the other devices leave uncovered.
fn seed_polish(net: &Network, cfg: &RunConfig) -> Result<Placement, PlacementError> {
    let p = cfg.require_p()?;
    let table = IncompatibilityTable::build(net, &cfg.ball);
    let seed = solve_seed_ilp(net, &cfg.ball, p, &table, SeedMode::ExactBnb)?;
    let mut placement = seed_to_placement(&seed, net, &cfg.ball, true);
    for j in 0..placement.len() {
        let others: Vec<Device> = placement
            .devices
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, d)| *d)
            .collect();
        let live: Vec<WeightedSegment> = crate::coverage::uncovered_pieces(net, &others)
            .into_iter()
            .map(|(e, lo, hi)| WeightedSegment {
                segment: net.segment(e).sub_segment(lo, hi),
                weight: net.weight(e),
            })
            .collect();
        let current =
            crate::single_device::objective_on(placement.devices[j].position, &live, &cfg.ball);
        let solver = SolverConfig {
            extra_seeds: vec![placement.devices[j].position],
            ..cfg.solver.clone()
        };
        let sol = solve_single_on(&live, &cfg.ball, &solver);
        if sol.objective > current {
            placement.devices[j].position = sol.position;
        }
    }
    Ok(placement)
}

/// Runs `strategy` and evaluates the result on the full network.
pub fn solve(
    net: &Network,
    cfg: &RunConfig,
    strategy: Strategy,
) -> Result<(Placement, CoverageReport), PlacementError> {
    if cfg.problem == Problem::Mnlclp && cfg.require_p()? == 0 {
        let empty = Placement::default();
        let report = evaluate(net, &empty);
        return Ok((empty, report));
    }
    let placement = match strategy {
        Strategy::Heuristic => math_heuristic(net, cfg)?,
        _ if cfg.problem == Problem::Psnlclp => {
            return Err(PlacementError::Unsupported(format!(
                "strategy {strategy:?} solves mnlclp only"
            )))
        }
        Strategy::SeedPolish => seed_polish(net, cfg)?,
        Strategy::BaselineNodes => restricted_baseline(net, cfg, BaselineMode::Nodes)?,
        Strategy::BaselineEdges => restricted_baseline(net, cfg, BaselineMode::Edges)?,
    };
    let report = evaluate(net, &placement);
    Ok((placement, report))
}
