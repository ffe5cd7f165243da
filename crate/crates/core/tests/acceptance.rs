//! Acceptance suite: twelve criteria, each checked against an oracle written
//! here from first principles. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any fails.

use std::process::ExitCode;
use std::time::Instant;

use netcover::compatibility::IncompatibilityTable;
use netcover::coverage::evaluate;
use netcover::geometry::{
    epsilon_star, point_segment_distance, segment_segment_distance, Ball, Norm, Point, Segment,
};
use netcover::ilp_seed::{solve_seed_ilp, SeedMode};
use netcover::model_export::{
    assignment_from_placement, build_multi, build_single, parse, serialize, verify_solution,
    ModelFormat,
};
use netcover::network::{Edge, Network, Node};
use netcover::placement::{
    math_heuristic, math_heuristic_traced, p_upper_bound, restricted_baseline, BaselineMode,
    HeuristicRun, Problem, RunConfig,
};
use netcover::single_device::{oracle_single, solve_single, SolverConfig};
use netcover::standin::{generate, STANDINS};
use netcover::{is_compatible_set, Device, Placement, TOL_EPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SCALE_RADIUS: f64 = 5.0;
const GRID_R: [f64; 3] = [0.1, 0.25, 0.5];
const GRID_P: [usize; 3] = [2, 5, 8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn p(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn rand_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    p(rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

/// Network of independent edges, one per segment.
fn network_of(segments: &[Segment], weights: &[f64]) -> Network {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (k, s) in segments.iter().enumerate() {
        nodes.push(Node {
            id: format!("a{k}"),
            x: s.a.x,
            y: s.a.y,
        });
        nodes.push(Node {
            id: format!("b{k}"),
            x: s.b.x,
            y: s.b.y,
        });
        edges.push(Edge {
            id: format!("e{k}"),
            source: format!("a{k}"),
            target: format!("b{k}"),
            weight: weights[k],
        });
    }
    Network::new(nodes, edges).expect("valid network")
}

/// Connected random graph: a random tree plus distinct random chords.
fn random_graph(rng: &mut ChaCha8Rng, n_nodes: usize, n_edges: usize, side: f64) -> Network {
    let pts: Vec<Point> = (0..n_nodes).map(|_| rand_point(rng, -side, side)).collect();
    let mut pairs: Vec<(usize, usize)> = (1..n_nodes).map(|v| (rng.gen_range(0..v), v)).collect();
    while pairs.len() < n_edges {
        let (a, b) = (rng.gen_range(0..n_nodes), rng.gen_range(0..n_nodes));
        let (a, b) = (a.min(b), a.max(b));
        if a != b && !pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == (a, b)) {
            pairs.push((a, b));
        }
    }
    pairs.truncate(n_edges);
    let nodes = pts
        .iter()
        .enumerate()
        .map(|(k, q)| Node {
            id: format!("n{k}"),
            x: q.x,
            y: q.y,
        })
        .collect();
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| Edge {
            id: format!("e{k}"),
            source: format!("n{a}"),
            target: format!("n{b}"),
            weight: rng.gen_range(0.5..3.0),
        })
        .collect();
    Network::new(nodes, edges).expect("valid network")
}

fn standins_scaled() -> Vec<(&'static str, Network)> {
    STANDINS
        .iter()
        .map(|s| {
            (
                s.name,
                generate(s).scale_to_disk(SCALE_RADIUS).expect("scalable"),
            )
        })
        .collect()
}

/// Euclidean distance from `q` to `[a, b]`, written independently of the
/// library kernels.
fn dist_ps(q: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((q.x - a.x) * dx + (q.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    ((q.x - a.x - t * dx).powi(2) + (q.y - a.y - t * dy).powi(2)).sqrt()
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    p(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

/// Minimum of a convex function on `[0, 1]` by dense sampling with three
/// rounds of zooming around the best sample.
fn sample_min_1d(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = f64::INFINITY;
    for _ in 0..4 {
        let n = 2000;
        let mut arg = lo;
        for k in 0..=n {
            let t = lo + (hi - lo) * k as f64 / n as f64;
            let v = f(t);
            if v < best {
                best = v;
                arg = t;
            }
        }
        let h = (hi - lo) / n as f64;
        (lo, hi) = ((arg - h).max(0.0), (arg + h).min(1.0));
    }
    best
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut lib_time = 0.0;
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let a = rand_point(&mut rng, -10.0, 10.0);
        let b = rand_point(&mut rng, -10.0, 10.0);
        let q = rand_point(&mut rng, -10.0, 10.0);
        let s = Segment::new(a, b);
        let t0 = Instant::now();
        let (d, _) = point_segment_distance(q, &s).expect("non-degenerate");
        lib_time += t0.elapsed().as_secs_f64();
        let oracle = sample_min_1d(|t| lerp(a, b, t).distance(q));
        worst = worst.max((d - oracle).abs());

        // second segment: generic, parallel, collinear-overlapping, crossing or touching
        let (c, e) = match case % 5 {
            0 => {
                let off = p(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let k = rng.gen_range(0.2..1.5);
                (a + off, lerp(a, b, k) + off)
            }
            1 => (
                lerp(a, b, rng.gen_range(-0.5..0.5)),
                lerp(a, b, rng.gen_range(0.6..1.5)),
            ),
            2 => {
                let m = lerp(a, b, rng.gen_range(0.1..0.9));
                let dir = rand_point(&mut rng, -3.0, 3.0);
                (m - dir, m + dir)
            }
            3 => (b, rand_point(&mut rng, -10.0, 10.0)),
            _ => (
                rand_point(&mut rng, -10.0, 10.0),
                rand_point(&mut rng, -10.0, 10.0),
            ),
        };
        if c.distance(e) < 1e-6 {
            continue;
        }
        let s2 = Segment::new(c, e);
        let t0 = Instant::now();
        let d2 = segment_segment_distance(&s, &s2).expect("non-degenerate");
        lib_time += t0.elapsed().as_secs_f64();
        // distance to a convex set along an affine path is convex in the parameter
        let oracle2 = sample_min_1d(|u| dist_ps(lerp(a, b, u), c, e));
        worst = worst.max((d2 - oracle2).abs());
    }
    outcome(
        worst <= 1e-5 && lib_time < 5.0,
        format!("1000 point and 1000 segment cases, max |lib - oracle| = {worst:.2e}, library time {lib_time:.4} s"),
    )
}

/// `min_X max_i dist(X, e_i) - R` on an `n × n` lattice over the bounding box
/// of the endpoints, with the lattice step.
fn grid_minimax(segs: &[(Point, Point)], radius: f64, n: usize) -> (f64, f64) {
    let xs = segs.iter().flat_map(|s| [s.0.x, s.1.x]);
    let ys = segs.iter().flat_map(|s| [s.0.y, s.1.y]);
    let (x0, x1) = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let (hx, hy) = ((x1 - x0) / (n - 1) as f64, (y1 - y0) / (n - 1) as f64);
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let q = p(x0 + i as f64 * hx, y0 + j as f64 * hy);
            let v = segs
                .iter()
                .map(|s| dist_ps(q, s.0, s.1))
                .fold(0.0, f64::max);
            best = best.min(v);
        }
    }
    (best - radius, hx.max(hy))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let cases: Vec<(Vec<(Point, Point)>, f64)> = (0..200)
        .map(|_| {
            let segs = (0..3)
                .map(|_| {
                    (
                        rand_point(&mut rng, -5.0, 5.0),
                        rand_point(&mut rng, -5.0, 5.0),
                    )
                })
                .collect();
            (segs, rng.gen_range(0.1..2.0))
        })
        .collect();
    let results: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|(segs, r)| {
            let lib_segs: Vec<Segment> = segs.iter().map(|&(a, b)| Segment::new(a, b)).collect();
            let (eps, _) = epsilon_star(&lib_segs, *r).expect("non-empty");
            let (grid, h) = grid_minimax(segs, *r, 600);
            ((eps - grid).abs(), h)
        })
        .collect();
    let bad = results.iter().filter(|(d, h)| *d > 2.0 * h).count();
    let worst_ratio = results.iter().map(|(d, h)| d / h).fold(0.0, f64::max);

    // points at the vertices of an equilateral triangle
    let mut circ_err: f64 = 0.0;
    for (rho, r, shift, rot) in [
        (1.0, 0.0001, p(0.0, 0.0), 0.0),
        (1.7, 0.3, p(2.0, -1.0), 0.4),
        (3.2, 1.1, p(-4.0, 7.0), 1.3),
    ] {
        let verts: Vec<Segment> = (0..3)
            .map(|k| {
                let t = rot + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                let v = shift + p(rho * t.cos(), rho * t.sin());
                Segment::new(v, v)
            })
            .collect();
        let (eps, _) = epsilon_star(&verts, r).expect("non-empty");
        circ_err = circ_err.max((eps - (rho - r)).abs());
    }
    outcome(
        bad == 0 && circ_err <= 1e-6,
        format!(
            "200 triples, {bad} outside 2 grid steps (worst {worst_ratio:.3} steps); equilateral error {circ_err:.2e}"
        ),
    )
}

enum GridVerdict {
    Empty,
    NonEmpty,
    Undecided,
}

/// Decides whether the stadiums meet within `tol` by lattice search with
/// Lipschitz certificates, zooming on the cells that stay undecided.
fn grid_emptiness(segs: &[(Point, Point)], radius: f64, tol: f64) -> GridVerdict {
    let xs = segs.iter().flat_map(|s| [s.0.x, s.1.x]);
    let ys = segs.iter().flat_map(|s| [s.0.y, s.1.y]);
    let (mut x0, mut x1) = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (mut y0, mut y1) = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let g = |q: Point| {
        segs.iter()
            .map(|s| dist_ps(q, s.0, s.1))
            .fold(0.0, f64::max)
            - radius
    };
    let n = 101;
    for _ in 0..40 {
        let (hx, hy) = (
            (x1 - x0).max(1e-15) / (n - 1) as f64,
            (y1 - y0).max(1e-15) / (n - 1) as f64,
        );
        // any point of the box lies within this distance of a lattice point
        let reach = 0.5 * (hx * hx + hy * hy).sqrt();
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut undecided = false;
        for i in 0..n {
            for j in 0..n {
                let q = p(x0 + i as f64 * hx, y0 + j as f64 * hy);
                let v = g(q);
                if v <= tol {
                    return GridVerdict::NonEmpty;
                }
                if v - reach <= tol {
                    undecided = true;
                    lo = (lo.0.min(q.x), lo.1.min(q.y));
                    hi = (hi.0.max(q.x), hi.1.max(q.y));
                }
            }
        }
        if !undecided {
            return GridVerdict::Empty;
        }
        (x0, x1) = ((lo.0 - hx).max(x0), (hi.0 + hx).min(x1));
        (y0, y1) = ((lo.1 - hy).max(y0), (hi.1 + hy).min(y1));
    }
    GridVerdict::Undecided
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let cases: Vec<(Vec<(Point, Point)>, f64)> = (0..500)
        .map(|_| {
            let k = rng.gen_range(2..=6);
            let segs = (0..k)
                .map(|_| {
                    let a = rand_point(&mut rng, 0.0, 6.0);
                    let b = a + rand_point(&mut rng, -2.0, 2.0);
                    (a, b)
                })
                .collect();
            (segs, rng.gen_range(0.6..2.2))
        })
        .collect();
    let verdicts: Vec<(bool, bool, Option<bool>)> = cases
        .par_iter()
        .map(|(segs, r)| {
            let lib: Vec<Segment> = segs.iter().map(|&(a, b)| Segment::new(a, b)).collect();
            let net = network_of(&lib, &vec![1.0; lib.len()]);
            let ball = Ball::euclidean(*r).expect("radius");
            let all: Vec<usize> = (0..lib.len()).collect();
            let table = IncompatibilityTable::build(&net, &ball);
            let grid = match grid_emptiness(segs, *r, TOL_EPS) {
                GridVerdict::NonEmpty => Some(true),
                GridVerdict::Empty => Some(false),
                GridVerdict::Undecided => None,
            };
            (
                table.predicts_compatible(&all),
                is_compatible_set(&all, &net, &ball).0,
                grid,
            )
        })
        .collect();
    let compatible = verdicts.iter().filter(|v| v.1).count();
    let undecided = verdicts.iter().filter(|v| v.2.is_none()).count();
    let disagree = verdicts
        .iter()
        .filter(|(t, d, g)| t != d || *g != Some(*d))
        .count();
    outcome(
        disagree == 0,
        format!("500 subsets ({compatible} compatible), {disagree} disagreements, {undecided} undecided by the grid"),
    )
}

fn norm_of(v: Point, norm: Norm) -> f64 {
    match norm {
        Norm::L1 => v.x.abs() + v.y.abs(),
        Norm::L2 => v.x.hypot(v.y),
        Norm::LInf => v.x.abs().max(v.y.abs()),
    }
}

fn criterion_4() -> Outcome {
    let net = generate(&STANDINS[0])
        .scale_to_disk(SCALE_RADIUS)
        .expect("scalable");
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let norms = [Norm::L2, Norm::L1, Norm::LInf];
    let placements: Vec<Placement> = (0..50)
        .map(|k| {
            let ball =
                Ball::new(norms[k % 3], [0.25, 0.5, 1.0][rng.gen_range(0..3)]).expect("radius");
            let count = rng.gen_range(1..=8);
            let devices = (0..count)
                .map(|_| {
                    let e = rng.gen_range(0..net.num_edges());
                    let on = net.point_on_edge(e, rng.gen_range(0.0..1.0));
                    let r = ball.radius;
                    Device::new(on + p(rng.gen_range(-r..r), rng.gen_range(-r..r)), ball)
                })
                .collect();
            Placement::new(devices)
        })
        .collect();
    let n = 100_000;
    let errors: Vec<f64> = placements
        .par_iter()
        .map(|pl| {
            let lib = evaluate(&net, pl).covered_weighted_length;
            let mut mc = 0.0;
            for e in 0..net.num_edges() {
                let s = net.segment(e);
                let hits = (0..n)
                    .filter(|&k| {
                        let q = lerp(s.a, s.b, (k as f64 + 0.5) / n as f64);
                        pl.devices
                            .iter()
                            .any(|d| norm_of(q - d.position, d.ball.norm) <= d.ball.radius)
                    })
                    .count();
                mc += net.weight(e) * net.length(e) * hits as f64 / n as f64;
            }
            if mc == 0.0 && lib == 0.0 {
                0.0
            } else {
                (lib - mc).abs() / mc.max(lib)
            }
        })
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 1e-3,
        format!("50 placements, L2/L1/Linf balls, max relative error {worst:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut slowest: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..20 {
        let m = rng.gen_range(10..=15);
        let n = rng.gen_range(8..=11);
        let net = random_graph(&mut rng, n, m, 5.0);
        let ball = Ball::euclidean([0.5, 1.0, 1.5][rng.gen_range(0..3)]).expect("radius");
        let t0 = Instant::now();
        let sol = solve_single(&net, &ball, &SolverConfig::default());
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let oracle = oracle_single(&net, &ball, 500);
        let gap = oracle.objective - sol.objective;
        worst_gap = worst_gap.max(gap);
        if gap > 1e-3 {
            failures += 1;
        }
    }
    outcome(
        failures == 0 && slowest < 2.0,
        format!(
            "20 instances, worst oracle - solver = {worst_gap:.2e}, slowest solve {slowest:.3} s"
        ),
    )
}

fn criterion_6() -> Outcome {
    let line = Network::new(
        vec![
            Node {
                id: "o".into(),
                x: 0.0,
                y: 0.0,
            },
            Node {
                id: "f".into(),
                x: 4.0,
                y: 0.0,
            },
        ],
        vec![Edge {
            id: "e".into(),
            source: "o".into(),
            target: "f".into(),
            weight: 1.0,
        }],
    )
    .expect("valid");
    let ball = Ball::euclidean(0.5).expect("radius");
    let mut values = Vec::new();
    let mut worst: f64 = 0.0;
    for count in 1..=4 {
        let placement = math_heuristic(&line, &RunConfig::mnlclp(count, ball)).expect("runs");
        let got = evaluate(&line, &placement).covered_weighted_length;
        worst = worst.max((got - (count as f64).min(4.0)).abs());
        values.push(format!("{got:.6}"));
    }
    outcome(
        worst <= 1e-6,
        format!(
            "coverage for p = 1..4: [{}], max error {worst:.2e}",
            values.join(", ")
        ),
    )
}

struct Cell {
    network: &'static str,
    radius: f64,
    p: usize,
    run: HeuristicRun,
    total: f64,
    recomputed: f64,
}

fn heuristic_grid(nets: &[(&'static str, Network)]) -> (Vec<Cell>, f64) {
    let t0 = Instant::now();
    let jobs: Vec<(usize, f64, usize)> = (0..nets.len())
        .flat_map(|n| {
            GRID_R
                .iter()
                .flat_map(move |&r| GRID_P.iter().map(move |&p| (n, r, p)))
        })
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, r, p)| {
            let (name, net) = &nets[n];
            let cfg = RunConfig::mnlclp(p, Ball::euclidean(r).expect("radius"));
            let run = math_heuristic_traced(net, &cfg).expect("runs");
            let recomputed = evaluate(net, &run.placement).covered_weighted_length;
            Cell {
                network: name,
                radius: r,
                p,
                run,
                total: net.total_weighted_length(),
                recomputed,
            }
        })
        .collect();
    (cells, t0.elapsed().as_secs_f64())
}

fn criterion_7(cells: &[Cell], seconds: f64) -> Outcome {
    let mut monotone = true;
    let mut conservation: f64 = 0.0;
    let mut recompute: f64 = 0.0;
    for c in cells {
        let mut prev = 0.0;
        for it in &c.run.trace {
            monotone &= it.new_coverage > 0.0 && it.cumulative >= prev;
            prev = it.cumulative;
            conservation =
                conservation.max((it.cumulative + it.live_weighted_length - c.total).abs());
        }
        recompute = recompute.max((prev - c.recomputed).abs());
    }
    outcome(
        monotone && conservation <= 1e-9 && recompute <= 1e-9 && seconds < 600.0,
        format!(
            "{} cells, monotone = {monotone}, conservation error {conservation:.2e}, re-evaluation error {recompute:.2e}, {seconds:.1} s",
            cells.len()
        ),
    )
}

fn criterion_8(nets: &[(&'static str, Network)]) -> Outcome {
    let jobs: Vec<(usize, f64, f64)> = (0..nets.len())
        .flat_map(|n| {
            [0.25, 0.5]
                .into_iter()
                .flat_map(move |r| [0.5, 0.75, 1.0].into_iter().map(move |g| (n, r, g)))
        })
        .collect();
    let rows: Vec<(String, bool, f64)> = jobs
        .par_iter()
        .map(|&(n, r, gamma)| {
            let (name, net) = &nets[n];
            let ball = Ball::euclidean(r).expect("radius");
            let bound = p_upper_bound(net, &ball, gamma).expect("valid gamma");
            match math_heuristic(net, &RunConfig::psnlclp(gamma, ball)) {
                Ok(pl) => {
                    let frac = evaluate(net, &pl).fraction;
                    let tag = format!("{name} R={r} gamma={gamma}: {} devices (bound {bound}), fraction {frac:.6}", pl.len());
                    (tag, frac >= gamma - 1e-9 && pl.len() <= bound, pl.len() as f64 / bound as f64)
                }
                Err(err) => (format!("{name} R={r} gamma={gamma}: {err}"), false, f64::NAN),
            }
        })
        .collect();
    let bad: Vec<&str> = rows.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    let worst_use = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    outcome(
        bad.is_empty(),
        format!(
            "{} runs, highest devices/bound ratio {worst_use:.3}{}",
            rows.len(),
            failures_suffix(&bad)
        ),
    )
}

fn failures_suffix(bad: &[&str]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join("; "))
    }
}

fn criterion_9(nets: &[(&'static str, Network)], cells: &[Cell]) -> Outcome {
    let jobs: Vec<(usize, f64)> = (0..nets.len())
        .flat_map(|n| GRID_R.iter().map(move |&r| (n, r)))
        .collect();
    let single: Vec<(String, f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let (name, net) = &nets[n];
            let ball = Ball::euclidean(r).expect("radius");
            let cfg = RunConfig::mnlclp(1, ball);
            let edge_pl = restricted_baseline(net, &cfg, BaselineMode::Edges).expect("runs");
            let node_pl = restricted_baseline(net, &cfg, BaselineMode::Nodes).expect("runs");
            let edge = evaluate(net, &edge_pl).covered_weighted_length;
            let node = evaluate(net, &node_pl).covered_weighted_length;
            let seeds =
                netcover::placement::baseline_candidates(net, &ball, BaselineMode::Edges, None);
            let seeded = solve_single(
                net,
                &ball,
                &SolverConfig {
                    extra_seeds: seeds,
                    ..SolverConfig::default()
                },
            );
            let unrestricted = seeded
                .objective
                .max(oracle_single(net, &ball, 500).objective);
            (format!("{name} R={r}"), unrestricted, edge, node)
        })
        .collect();
    let broken: Vec<String> = single
        .iter()
        .filter(|(_, u, e, n)| !(u + 1e-9 >= *e && e + 1e-9 >= *n))
        .map(|(tag, u, e, n)| format!("{tag} ({u:.6} / {e:.6} / {n:.6})"))
        .collect();

    let mut wins = 0;
    let mut exceptions = Vec::new();
    for c in cells {
        let net = &nets
            .iter()
            .find(|(name, _)| *name == c.network)
            .expect("known")
            .1;
        let cfg = RunConfig::mnlclp(c.p, Ball::euclidean(c.radius).expect("radius"));
        let node = evaluate(
            net,
            &restricted_baseline(net, &cfg, BaselineMode::Nodes).expect("runs"),
        )
        .covered_weighted_length;
        if c.recomputed + 1e-9 >= node {
            wins += 1;
        } else {
            exceptions.push(format!(
                "{} R={} p={} ({:.4} < {:.4})",
                c.network, c.radius, c.p, c.recomputed, node
            ));
        }
    }
    let share = wins as f64 / cells.len() as f64;
    let exc = if exceptions.is_empty() {
        "none".to_string()
    } else {
        exceptions.join("; ")
    };
    let broken_msg = if broken.is_empty() {
        String::new()
    } else {
        format!("; p=1 violations: {}", broken.join("; "))
    };
    outcome(
        broken.is_empty() && share >= 0.9,
        format!(
            "p=1 chain holds on {}/{} cells; heuristic >= node greedy on {wins}/{} cells ({:.1}%), exceptions: {exc}{broken_msg}",
            single.len() - broken.len(),
            single.len(),
            cells.len(),
            100.0 * share
        ),
    )
}

/// Best total weight of at most `p ≤ 2` disjoint compatible edge sets,
/// enumerating every subset and testing compatibility directly.
fn exhaustive_pack(net: &Network, ball: &Ball, p: usize) -> f64 {
    let m = net.num_edges();
    let full = 1usize << m;
    let w: Vec<f64> = (0..m).map(|e| net.weighted_length(e)).collect();
    let mut compatible = vec![false; full];
    let mut weight = vec![0.0; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        weight[mask] = weight[mask & (mask - 1)] + w[low];
        let edges: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        compatible[mask] = if edges.len() == 1 {
            true
        } else {
            edges.iter().all(|&e| compatible[mask & !(1 << e)])
                && is_compatible_set(&edges, net, ball).0
        };
    }
    // best[T]: heaviest compatible subset of T
    let mut best = vec![0.0f64; full];
    for mask in 1..full {
        let mut b = if compatible[mask] { weight[mask] } else { 0.0 };
        for e in 0..m {
            if mask >> e & 1 == 1 {
                b = b.max(best[mask & !(1 << e)]);
            }
        }
        best[mask] = b;
    }
    if p == 1 {
        return best[full - 1];
    }
    (0..full)
        .filter(|&s| compatible[s] || s == 0)
        .map(|s| weight[s] + best[(full - 1) & !s])
        .fold(0.0, f64::max)
}

fn criterion_10() -> Outcome {
    let t0 = Instant::now();
    let gessler = generate(&STANDINS[0])
        .scale_to_disk(SCALE_RADIUS)
        .expect("scalable");
    let mut instances: Vec<(String, Network, f64)> = [0.1, 0.25, 0.5, 1.0, 2.0]
        .iter()
        .map(|&r| (format!("gessler R={r}"), gessler.clone(), r))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for k in 0..12 {
        let m = rng.gen_range(8..=14);
        let n = rng.gen_range(7..=10);
        let net = random_graph(&mut rng, n, m, 4.0);
        instances.push((format!("random{k} |E|={m}"), net, rng.gen_range(0.4..2.0)));
    }
    let results: Vec<(String, bool)> = instances
        .par_iter()
        .flat_map(|(tag, net, r)| {
            let ball = Ball::euclidean(*r).expect("radius");
            let table = IncompatibilityTable::build(net, &ball);
            (1..=2)
                .map(|p| {
                    let seed =
                        solve_seed_ilp(net, &ball, p, &table, SeedMode::ExactBnb).expect("solves");
                    let truth = exhaustive_pack(net, &ball, p);
                    let ok = seed.proven_optimal
                        && (seed.ilp_value - truth).abs() <= 1e-9 * truth.max(1.0);
                    (
                        format!("{tag} p={p}: {:.6} vs {truth:.6}", seed.ilp_value),
                        ok,
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let seconds = t0.elapsed().as_secs_f64();
    let bad: Vec<&str> = results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    outcome(
        bad.is_empty() && seconds < 60.0,
        format!(
            "{} instance/p pairs match exhaustive enumeration, {seconds:.1} s{}",
            results.len() - bad.len(),
            failures_suffix(&bad)
        ),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut checked = 0;
    let mut worst_row: f64 = 0.0;
    let mut worst_obj: f64 = 0.0;
    let mut failures = Vec::new();
    let mut deterministic = true;
    for case in 0..40 {
        let m = rng.gen_range(1..=5);
        let least = (2..)
            .find(|&n: &usize| n * (n - 1) / 2 >= m)
            .expect("exists");
        let n = rng.gen_range(least..=m + 1);
        let net = random_graph(&mut rng, n, m, 2.0);
        let ball = Ball::euclidean([0.3, 0.6, 1.0][rng.gen_range(0..3)]).expect("radius");
        for count in 1..=3 {
            let model =
                build_multi(&net, &vec![ball; count], Problem::Mnlclp, None).expect("builds");
            let text = serialize(&model, ModelFormat::ConicText);
            for _ in 0..2 {
                let again =
                    build_multi(&net, &vec![ball; count], Problem::Mnlclp, None).expect("builds");
                deterministic &= serialize(&again, ModelFormat::ConicText) == text;
            }
            deterministic &=
                serialize(&parse(&text).expect("parses"), ModelFormat::ConicText) == text;

            let mut placements =
                vec![math_heuristic(&net, &RunConfig::mnlclp(count, ball)).expect("runs")];
            for _ in 0..3 {
                let devices = (0..count)
                    .map(|_| {
                        let e = rng.gen_range(0..m);
                        let on = net.point_on_edge(e, rng.gen_range(0.0..1.0));
                        let r = ball.radius;
                        Device::new(
                            on + p(rng.gen_range(-r..r), rng.gen_range(-r..r)) * 0.7,
                            ball,
                        )
                    })
                    .collect();
                placements.push(Placement::new(devices));
            }
            let single = if count == 1 {
                Some(build_single(&net, &ball).expect("builds"))
            } else {
                None
            };
            for pl in placements.iter().filter(|pl| !pl.is_empty()) {
                let truth = evaluate(&net, pl).covered_weighted_length;
                for mdl in std::iter::once(&model).chain(single.iter()) {
                    let asg = assignment_from_placement(mdl, &net, pl).expect("maps");
                    let v = verify_solution(mdl, &net, &asg).expect("complete");
                    checked += 1;
                    let row = v.violations.iter().map(|x| x.amount).fold(0.0, f64::max);
                    worst_row = worst_row.max(row);
                    worst_obj = worst_obj.max((v.objective - truth).abs());
                    if !v.feasible || (v.objective - truth).abs() > 1e-6 {
                        failures.push(format!("case {case} p={count}: {:?}", v.violations.first()));
                    }
                }
            }
        }
    }

    let two = Network::new(
        vec![
            Node {
                id: "a".into(),
                x: 0.0,
                y: 0.0,
            },
            Node {
                id: "b".into(),
                x: 1.0,
                y: 0.0,
            },
            Node {
                id: "c".into(),
                x: 1.0,
                y: 1.0,
            },
        ],
        vec![
            Edge {
                id: "ab".into(),
                source: "a".into(),
                target: "b".into(),
                weight: 1.0,
            },
            Edge {
                id: "bc".into(),
                source: "b".into(),
                target: "c".into(),
                weight: 1.0,
            },
        ],
    )
    .expect("valid");
    let m = build_multi(
        &two,
        &[Ball::euclidean(0.5).expect("radius"); 2],
        Problem::Mnlclp,
        None,
    )
    .expect("builds");
    let counts = [
        m.count_family("z"),
        m.count_family("lam0") + m.count_family("lam1"),
        m.count_family("xi0") + m.count_family("xi1"),
        m.count_family("w"),
        m.count_family("X"),
    ];
    let counts_ok = counts == [4, 8, 32, 6, 4];
    let bad: Vec<&str> = failures.iter().map(String::as_str).collect();
    outcome(
        bad.is_empty() && deterministic && counts_ok,
        format!(
            "{checked} placement/model checks, max row violation {worst_row:.2e}, max objective error {worst_obj:.2e}; \
             byte-identical serialization = {deterministic}; (p=2, |E|=2) counts z/lambda/xi/w/X = {counts:?}{}",
            failures_suffix(&bad)
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut nets: Vec<Network> = STANDINS.iter().map(generate).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    for _ in 0..100 {
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let n = rng.gen_range(2..=30);
        let m = rng.gen_range(n - 1..=2 * n - 1).max(1);
        let base = random_graph(&mut rng, n, m.min(n * (n - 1) / 2), 1.0);
        let shift = rand_point(&mut rng, -1000.0, 1000.0);
        let nodes = base
            .nodes()
            .iter()
            .map(|nd| Node {
                id: nd.id.clone(),
                x: nd.x * scale + shift.x,
                y: nd.y * scale + shift.y,
            })
            .collect();
        nets.push(Network::new(nodes, base.edges().to_vec()).expect("valid"));
    }
    let worst = nets
        .iter()
        .map(|net| {
            let scaled = net.scale_to_disk(SCALE_RADIUS).expect("scalable");
            let max = scaled
                .nodes()
                .iter()
                .map(|nd| nd.position().norm())
                .fold(0.0, f64::max);
            (max - SCALE_RADIUS).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!(
            "{} networks, max |max node norm - 5| = {worst:.2e}",
            nets.len()
        ),
    )
}

fn main() -> ExitCode {
    let nets = standins_scaled();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |k: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        let line = format!(
            "{} criterion {k:>2} {name}: {} [{:.1} s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            t0.elapsed().as_secs_f64()
        );
        println!("{line}");
        results.push((k, name, out));
    };
    run(1, "geometry oracles", &mut criterion_1);
    run(2, "minimax slack", &mut criterion_2);
    run(3, "pair and triple compatibility", &mut criterion_3);
    run(4, "coverage exactness", &mut criterion_4);
    run(5, "single-device quality", &mut criterion_5);
    run(6, "straight-line optimum", &mut criterion_6);
    let (cells, seconds) = heuristic_grid(&nets);
    run(7, "sequential heuristic invariants", &mut || {
        criterion_7(&cells, seconds)
    });
    run(8, "partial cover contract", &mut || criterion_8(&nets));
    run(9, "dominance over restricted baselines", &mut || {
        criterion_9(&nets, &cells)
    });
    run(10, "seed packing exactness", &mut criterion_10);
    run(11, "model export fidelity", &mut criterion_11);
    run(12, "disk scaling", &mut criterion_12);
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
