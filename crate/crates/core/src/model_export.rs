//! Exact mixed-integer conic formulations, built as plain data and written
//! in a line-oriented text format for external solvers.
//!
//! Three models are available: the single-device model, the multi-device
//! model for both problems, and the edge-packing seed program. Products of a
//! binary and a bounded continuous variable are linearized exactly with
//! McCormick rows. The grammar and the row counts are documented in
//! `docs/format.md`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compatibility::{pairwise_incompatible_segments, IncompatibilityTable};
use crate::coverage::{evaluate, CoverageReport, Device, Placement};
use crate::geometry::{clip_segment, Ball, Norm, Point, Segment};
use crate::network::Network;
use crate::placement::{p_upper_bound, Problem};

/// Absolute tolerance for row, bound and integrality checks.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("model needs at least one edge")]
    EmptyInstance,
    #[error("model needs at least one device")]
    NoDevices,
    #[error("problem psnlclp requires gamma")]
    MissingGamma,
    #[error("gamma must lie in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("{expected} set-up costs expected, got {got}")]
    CostCount { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("row {row} references undeclared variable index {index}")]
    UndeclaredVariable { row: String, index: usize },
    #[error("assignment misses {} variables, first {}", .0.len(), .0[0])]
    MissingVariables(Vec<String>),
    #[error("metadata key {0} missing or malformed")]
    Metadata(String),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Eq => "eq",
        }
    }
}

/// `Σ coeff·var + constant`; variables are indices into the model's list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

/// `Σ coeff·var  sense  rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `‖(lhs_1, …, lhs_k)‖₂ <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SocRow {
    pub name: String,
    pub lhs: Vec<Affine>,
    pub rhs: Affine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: ObjSense,
    pub expr: Affine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicModel {
    pub variables: Vec<Variable>,
    pub objective: Objective,
    pub linear: Vec<LinearRow>,
    pub soc: Vec<SocRow>,
    pub metadata: BTreeMap<String, String>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
}

impl ConicModel {
    fn empty(sense: ObjSense) -> Self {
        ConicModel {
            variables: Vec::new(),
            objective: Objective {
                sense,
                expr: Affine::default(),
            },
            linear: Vec::new(),
            soc: Vec::new(),
            metadata: BTreeMap::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Number of declared variables whose name starts with `family[`.
    pub fn count_family(&self, family: &str) -> usize {
        let prefix = format!("{family}[");
        self.variables
            .iter()
            .filter(|v| v.name.starts_with(&prefix))
            .count()
    }

    fn var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64) -> usize {
        let idx = self.variables.len();
        let prev = self.lookup.insert(name.clone(), idx);
        debug_assert!(prev.is_none(), "duplicate variable {name}");
        self.variables.push(Variable { name, kind, lb, ub });
        idx
    }

    fn binary(&mut self, name: String) -> usize {
        self.var(name, VarKind::Binary, 0.0, 1.0)
    }

    fn unit(&mut self, name: String) -> usize {
        self.var(name, VarKind::Continuous, 0.0, 1.0)
    }

    fn free(&mut self, name: String) -> usize {
        self.var(name, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn row(&mut self, name: String, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.linear.push(LinearRow {
            name,
            coeffs,
            sense,
            rhs,
        });
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    fn meta_get<T: std::str::FromStr>(&self, key: &str) -> Result<T, ExportError> {
        self.metadata
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ExportError::Metadata(key.to_string()))
    }

    fn record_counts(&mut self) {
        self.meta("num_vars", self.variables.len());
        self.meta("num_binaries", self.num_binaries());
        self.meta("num_linear", self.linear.len());
        self.meta("num_soc", self.soc.len());
    }

    /// Every row references declared variables and binaries have `{0, 1}`
    /// bounds.
    pub fn validate(&self) -> Result<(), ExportError> {
        let n = self.variables.len();
        let check = |row: &str, coeffs: &[(usize, f64)]| {
            coeffs
                .iter()
                .find(|&&(v, _)| v >= n)
                .map_or(Ok(()), |&(index, _)| {
                    Err(ExportError::UndeclaredVariable {
                        row: row.to_string(),
                        index,
                    })
                })
        };
        check("objective", &self.objective.expr.coeffs)?;
        for r in &self.linear {
            check(&r.name, &r.coeffs)?;
        }
        for c in &self.soc {
            check(&c.name, &c.rhs.coeffs)?;
            for a in &c.lhs {
                check(&c.name, &a.coeffs)?;
            }
        }
        if let Some(v) = self
            .variables
            .iter()
            .find(|v| v.kind == VarKind::Binary && (v.lb, v.ub) != (0.0, 1.0))
        {
            return Err(ExportError::Unsupported(format!(
                "binary {} has bounds [{}, {}]",
                v.name, v.lb, v.ub
            )));
        }
        Ok(())
    }
}

/// Edge data a model is built from; decoupled from [`Network`] so that
/// degenerate inputs (no edges) can be expressed and rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelInstance {
    pub name: String,
    pub edges: Vec<ModelEdge>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelEdge {
    pub id: String,
    pub origin: Point,
    pub target: Point,
    pub weight: f64,
}

impl ModelEdge {
    fn segment(&self) -> Segment {
        Segment::new(self.origin, self.target)
    }

    fn weighted_length(&self) -> f64 {
        self.weight * self.segment().length()
    }
}

impl ModelInstance {
    pub fn from_network(name: &str, net: &Network) -> Self {
        let edges = (0..net.num_edges())
            .map(|e| {
                let s = net.segment(e);
                ModelEdge {
                    id: net.edges()[e].id.clone(),
                    origin: s.a,
                    target: s.b,
                    weight: net.weight(e),
                }
            })
            .collect();
        ModelInstance {
            name: name.to_string(),
            edges,
        }
    }

    /// Big-M constant: endpoint diameter in every norm used, plus `2R`.
    fn delta(&self, balls: &[Ball]) -> f64 {
        let pts: Vec<Point> = self
            .edges
            .iter()
            .flat_map(|e| [e.origin, e.target])
            .collect();
        let norms: BTreeSet<Norm> = balls.iter().map(|b| b.norm).collect();
        let mut diam: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                for &norm in &norms {
                    diam = diam.max((*a - *b).norm_in(norm));
                }
            }
        }
        let r = balls.iter().map(|b| b.radius).fold(0.0, f64::max);
        diam + 2.0 * r
    }

    fn write_edge_meta(&self, model: &mut ConicModel) {
        let ids: Vec<&str> = self.edges.iter().map(|e| e.id.as_str()).collect();
        model.meta(
            "instance",
            if self.name.is_empty() {
                "unnamed"
            } else {
                &self.name
            },
        );
        model.meta("edges", ids.join(" "));
    }
}

/// Adds the big-M coverage rows `‖o + λd − X‖ <= R + Δ(1 − z)`: one cone in
/// the Euclidean case, four half-planes for the polyhedral norms.
fn add_coverage_rows(
    model: &mut ConicModel,
    name: &str,
    edge: &ModelEdge,
    lambda: usize,
    xs: [usize; 2],
    z: usize,
    ball: &Ball,
    delta: f64,
) {
    let o = edge.origin;
    let d = edge.target - edge.origin;
    match ball.norm.facet_normals() {
        None => {
            let lhs = vec![
                Affine {
                    coeffs: vec![(lambda, d.x), (xs[0], -1.0)],
                    constant: o.x,
                },
                Affine {
                    coeffs: vec![(lambda, d.y), (xs[1], -1.0)],
                    constant: o.y,
                },
            ];
            let rhs = Affine {
                coeffs: vec![(z, -delta)],
                constant: ball.radius + delta,
            };
            model.soc.push(SocRow {
                name: name.to_string(),
                lhs,
                rhs,
            });
        }
        Some(normals) => {
            // the unit ball is {v : n·v <= 1} over its facets
            for (k, n) in normals.iter().enumerate() {
                model.row(
                    format!("{name}#{k}"),
                    vec![(lambda, n.dot(d)), (xs[0], -n.x), (xs[1], -n.y), (z, delta)],
                    Sense::Le,
                    ball.radius + delta - n.dot(o),
                );
            }
        }
    }
}

fn write_ball_meta(model: &mut ConicModel, balls: &[Ball]) {
    for (j, b) in balls.iter().enumerate() {
        model.meta(&format!("device.{}.radius", j + 1), b.radius);
        model.meta(&format!("device.{}.norm", j + 1), b.norm);
    }
}

pub fn build_single(net: &Network, ball: &Ball) -> Result<ConicModel, ExportError> {
    build_single_instance(&ModelInstance::from_network("network", net), ball, None)
}

/// The single-device model. With `table`, the pair and triple conflicts are
/// added as rows `z_a + z_b <= 1` and `z_a + z_b + z_c <= 2`.
pub fn build_single_instance(
    inst: &ModelInstance,
    ball: &Ball,
    table: Option<&IncompatibilityTable>,
) -> Result<ConicModel, ExportError> {
    if inst.edges.is_empty() {
        return Err(ExportError::EmptyInstance);
    }
    let delta = inst.delta(&[*ball]);
    let mut m = ConicModel::empty(ObjSense::Maximize);
    let n = inst.edges.len();
    let z: Vec<usize> = (0..n).map(|e| m.binary(format!("z[{e}]"))).collect();
    let lam0: Vec<usize> = (0..n).map(|e| m.unit(format!("lam0[{e}]"))).collect();
    let lam1: Vec<usize> = (0..n).map(|e| m.unit(format!("lam1[{e}]"))).collect();
    let xs = [m.free("X[1]".into()), m.free("X[2]".into())];
    for (e, edge) in inst.edges.iter().enumerate() {
        let wl = edge.weighted_length();
        m.objective
            .expr
            .coeffs
            .extend([(lam1[e], wl), (lam0[e], -wl)]);
        add_coverage_rows(
            &mut m,
            &format!("cov0[{e}]"),
            edge,
            lam0[e],
            xs,
            z[e],
            ball,
            delta,
        );
        add_coverage_rows(
            &mut m,
            &format!("cov1[{e}]"),
            edge,
            lam1[e],
            xs,
            z[e],
            ball,
            delta,
        );
        m.row(
            format!("dir[{e}]"),
            vec![(lam0[e], 1.0), (lam1[e], -1.0)],
            Sense::Le,
            0.0,
        );
        m.row(
            format!("zero[{e}]"),
            vec![(lam1[e], 1.0), (z[e], -1.0)],
            Sense::Le,
            0.0,
        );
    }
    if let Some(t) = table {
        for &(a, b) in &t.pairs {
            m.row(
                format!("helly[{a},{b}]"),
                vec![(z[a], 1.0), (z[b], 1.0)],
                Sense::Le,
                1.0,
            );
        }
        for &(a, b, c) in &t.triples {
            m.row(
                format!("helly[{a},{b},{c}]"),
                vec![(z[a], 1.0), (z[b], 1.0), (z[c], 1.0)],
                Sense::Le,
                2.0,
            );
        }
    }
    m.meta("model", "single");
    m.meta("problem", "mnlclp");
    m.meta("p", 1);
    m.meta("delta", delta);
    write_ball_meta(&mut m, &[*ball]);
    inst.write_edge_meta(&mut m);
    m.record_counts();
    Ok(m)
}

/// Options of the multi-device model beyond the instance and the balls.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiOptions {
    pub gamma: Option<f64>,
    /// Per-device set-up costs for the partial-cover objective.
    pub costs: Option<Vec<f64>>,
}

pub fn build_multi(
    net: &Network,
    balls: &[Ball],
    problem: Problem,
    gamma: Option<f64>,
) -> Result<ConicModel, ExportError> {
    let opts = MultiOptions { gamma, costs: None };
    build_multi_instance(
        &ModelInstance::from_network("network", net),
        balls,
        problem,
        &opts,
    )
}

/// Device balls for the partial-cover model when `p` is not given: the
/// upper bound on the number of devices needed.
pub fn default_psnlclp_balls(
    net: &Network,
    ball: &Ball,
    gamma: f64,
) -> Result<Vec<Ball>, ExportError> {
    let p = p_upper_bound(net, ball, gamma).map_err(|_| ExportError::InvalidGamma(gamma))?;
    Ok(vec![*ball; p])
}

struct MultiIndex {
    z: Vec<Vec<usize>>,
    lam: Vec<Vec<[usize; 2]>>,
    xi: Vec<Vec<Vec<[usize; 2]>>>,
    pi: Vec<Vec<Vec<[usize; 2]>>>,
    w: Vec<Vec<usize>>,
    eta: Vec<Vec<usize>>,
    x: Vec<[usize; 2]>,
    y: Vec<usize>,
}

/// The multi-device model. `j` and `ℓ` are 1-based in names, edges are
/// 0-based indices into the `edges` metadata list.
pub fn build_multi_instance(
    inst: &ModelInstance,
    balls: &[Ball],
    problem: Problem,
    opts: &MultiOptions,
) -> Result<ConicModel, ExportError> {
    if inst.edges.is_empty() {
        return Err(ExportError::EmptyInstance);
    }
    let p = balls.len();
    if p == 0 {
        return Err(ExportError::NoDevices);
    }
    let gamma = match problem {
        Problem::Psnlclp => {
            let g = opts.gamma.ok_or(ExportError::MissingGamma)?;
            if !(g > 0.0 && g <= 1.0) {
                return Err(ExportError::InvalidGamma(g));
            }
            Some(g)
        }
        Problem::Mnlclp => None,
    };
    if let Some(c) = &opts.costs {
        if c.len() != p {
            return Err(ExportError::CostCount {
                expected: p,
                got: c.len(),
            });
        }
    }
    let n = inst.edges.len();
    let positions = 2 * p;
    let delta = inst.delta(balls);
    let sense = if problem == Problem::Mnlclp {
        ObjSense::Maximize
    } else {
        ObjSense::Minimize
    };
    let mut m = ConicModel::empty(sense);

    let z: Vec<Vec<usize>> = (1..=p)
        .map(|j| (0..n).map(|e| m.binary(format!("z[{j},{e}]"))).collect())
        .collect();
    let lam: Vec<Vec<[usize; 2]>> = (1..=p)
        .map(|j| {
            (0..n)
                .map(|e| {
                    [
                        m.unit(format!("lam0[{j},{e}]")),
                        m.unit(format!("lam1[{j},{e}]")),
                    ]
                })
                .collect()
        })
        .collect();
    let xi: Vec<Vec<Vec<[usize; 2]>>> = (1..=p)
        .map(|j| {
            (0..n)
                .map(|e| {
                    (1..=positions)
                        .map(|l| {
                            [
                                m.binary(format!("xi0[{j},{e},{l}]")),
                                m.binary(format!("xi1[{j},{e},{l}]")),
                            ]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let w: Vec<Vec<usize>> = (0..n)
        .map(|e| {
            (1..positions)
                .map(|l| m.binary(format!("w[{e},{l}]")))
                .collect()
        })
        .collect();
    let x: Vec<[usize; 2]> = (1..=p)
        .map(|j| [m.free(format!("X[{j},1]")), m.free(format!("X[{j},2]"))])
        .collect();
    let pi: Vec<Vec<Vec<[usize; 2]>>> = (1..=p)
        .map(|j| {
            (0..n)
                .map(|e| {
                    (1..=positions)
                        .map(|l| {
                            [
                                m.unit(format!("pi0[{j},{e},{l}]")),
                                m.unit(format!("pi1[{j},{e},{l}]")),
                            ]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let eta: Vec<Vec<usize>> = (0..n)
        .map(|e| {
            (1..positions)
                .map(|l| m.unit(format!("eta[{e},{l}]")))
                .collect()
        })
        .collect();
    let y: Vec<usize> = match problem {
        Problem::Psnlclp => (1..=p).map(|j| m.binary(format!("y[{j}]"))).collect(),
        Problem::Mnlclp => Vec::new(),
    };
    let ix = MultiIndex {
        z,
        lam,
        xi,
        pi,
        w,
        eta,
        x,
        y,
    };

    // sum over devices and both ends of the λ-values sorted into position l
    let sorted_value = |e: usize, l: usize| -> Vec<(usize, f64)> {
        (0..p)
            .flat_map(|j| [(ix.pi[j][e][l][0], 1.0), (ix.pi[j][e][l][1], 1.0)])
            .collect()
    };

    for j in 0..p {
        for (e, edge) in inst.edges.iter().enumerate() {
            let (jj, [l0, l1]) = (j + 1, ix.lam[j][e]);
            add_coverage_rows(
                &mut m,
                &format!("cov0[{jj},{e}]"),
                edge,
                l0,
                ix.x[j],
                ix.z[j][e],
                &balls[j],
                delta,
            );
            add_coverage_rows(
                &mut m,
                &format!("cov1[{jj},{e}]"),
                edge,
                l1,
                ix.x[j],
                ix.z[j][e],
                &balls[j],
                delta,
            );
            m.row(
                format!("dir[{jj},{e}]"),
                vec![(l0, 1.0), (l1, -1.0)],
                Sense::Le,
                0.0,
            );
            m.row(
                format!("zero[{jj},{e}]"),
                vec![(l1, 1.0), (ix.z[j][e], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }
    for e in 0..n {
        for l in 0..positions {
            let coeffs = (0..p)
                .flat_map(|j| [(ix.xi[j][e][l][0], 1.0), (ix.xi[j][e][l][1], 1.0)])
                .collect();
            m.row(format!("sort_pos[{e},{}]", l + 1), coeffs, Sense::Eq, 1.0);
        }
    }
    for j in 0..p {
        for e in 0..n {
            for s in 0..2 {
                let coeffs = (0..positions).map(|l| (ix.xi[j][e][l][s], 1.0)).collect();
                m.row(
                    format!("sort_val[{},{e},{s}]", j + 1),
                    coeffs,
                    Sense::Eq,
                    1.0,
                );
            }
        }
    }
    for e in 0..n {
        for l in 0..positions - 1 {
            let mut coeffs = sorted_value(e, l);
            coeffs.extend(sorted_value(e, l + 1).into_iter().map(|(v, c)| (v, -c)));
            m.row(format!("order[{e},{}]", l + 1), coeffs, Sense::Le, 0.0);
        }
    }
    for e in 0..n {
        for l in 0..positions - 1 {
            // w <= Σ_j (Σ_{i<=l} ξ⁰ + Σ_{i>l} ξ¹ − 1)
            let mut coeffs = vec![(ix.w[e][l], 1.0)];
            for j in 0..p {
                coeffs.extend((0..=l).map(|i| (ix.xi[j][e][i][0], -1.0)));
                coeffs.extend((l + 1..positions).map(|i| (ix.xi[j][e][i][1], -1.0)));
            }
            m.row(
                format!("sub[{e},{}]", l + 1),
                coeffs,
                Sense::Le,
                -(p as f64),
            );
        }
    }
    // π = λ·ξ
    for j in 0..p {
        for e in 0..n {
            for l in 0..positions {
                for s in 0..2 {
                    let (pv, lv, xv) = (ix.pi[j][e][l][s], ix.lam[j][e][s], ix.xi[j][e][l][s]);
                    let tag = format!("{},{e},{},{s}", j + 1, l + 1);
                    m.row(
                        format!("mc_xi[{tag}]"),
                        vec![(pv, 1.0), (xv, -1.0)],
                        Sense::Le,
                        0.0,
                    );
                    m.row(
                        format!("mc_lam[{tag}]"),
                        vec![(pv, 1.0), (lv, -1.0)],
                        Sense::Le,
                        0.0,
                    );
                    m.row(
                        format!("mc_low[{tag}]"),
                        vec![(lv, 1.0), (xv, 1.0), (pv, -1.0)],
                        Sense::Le,
                        1.0,
                    );
                }
            }
        }
    }
    // η = w·(v_{l+1} − v_l) with the difference in [0, 1]
    let mut coverage = Vec::new();
    for (e, edge) in inst.edges.iter().enumerate() {
        for l in 0..positions - 1 {
            let (ev, wv) = (ix.eta[e][l], ix.w[e][l]);
            let mut diff = sorted_value(e, l + 1);
            diff.extend(sorted_value(e, l).into_iter().map(|(v, c)| (v, -c)));
            let tag = format!("{e},{}", l + 1);
            m.row(
                format!("eta_w[{tag}]"),
                vec![(ev, 1.0), (wv, -1.0)],
                Sense::Le,
                0.0,
            );
            let mut up = vec![(ev, 1.0)];
            up.extend(diff.iter().map(|&(v, c)| (v, -c)));
            m.row(format!("eta_d[{tag}]"), up, Sense::Le, 0.0);
            let mut low = diff.clone();
            low.extend([(wv, 1.0), (ev, -1.0)]);
            m.row(format!("eta_low[{tag}]"), low, Sense::Le, 1.0);
            coverage.push((ev, edge.weighted_length()));
        }
    }
    for e in 0..n {
        let mut coeffs: Vec<(usize, f64)> = ix.w[e].iter().map(|&v| (v, 1.0)).collect();
        coeffs.extend((0..p).map(|j| (ix.z[j][e], -2.0)));
        m.row(format!("touch[{e}]"), coeffs, Sense::Le, 0.0);
    }
    for j in 0..p.saturating_sub(1) {
        let [a1, a2] = ix.x[j];
        let [b1, b2] = ix.x[j + 1];
        m.row(
            format!("sym[{}]", j + 1),
            vec![(a1, 1.0), (a2, 1.0), (b1, -1.0), (b2, -1.0)],
            Sense::Le,
            0.0,
        );
    }
    let segments: Vec<Segment> = inst.edges.iter().map(ModelEdge::segment).collect();
    let mut far_cache: HashMap<(Norm, u64), BTreeSet<(usize, usize)>> = HashMap::new();
    for (j, ball) in balls.iter().enumerate() {
        let far = far_cache
            .entry((ball.norm, ball.radius.to_bits()))
            .or_insert_with(|| pairwise_incompatible_segments(&segments, ball));
        for &(a, b) in far.iter() {
            m.row(
                format!("incompat[{},{a},{b}]", j + 1),
                vec![(ix.z[j][a], 1.0), (ix.z[j][b], 1.0)],
                Sense::Le,
                1.0,
            );
        }
    }
    match gamma {
        None => m.objective.expr.coeffs = coverage,
        Some(g) => {
            let total: f64 = inst.edges.iter().map(ModelEdge::weighted_length).sum();
            m.row("gamma".into(), coverage, Sense::Ge, g * total);
            for j in 0..p {
                for e in 0..n {
                    m.row(
                        format!("act[{},{e}]", j + 1),
                        vec![(ix.z[j][e], 1.0), (ix.y[j], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
            for j in 1..p {
                m.row(
                    format!("ysym[{}]", j + 1),
                    vec![(ix.y[j - 1], 1.0), (ix.y[j], -1.0)],
                    Sense::Ge,
                    0.0,
                );
            }
            let costs = opts.costs.clone().unwrap_or_else(|| vec![1.0; p]);
            m.objective.expr.coeffs = ix.y.iter().zip(costs).map(|(&v, c)| (v, c)).collect();
            m.meta("gamma", g);
        }
    }
    m.meta("model", "multi");
    m.meta(
        "problem",
        if problem == Problem::Mnlclp {
            "mnlclp"
        } else {
            "psnlclp"
        },
    );
    m.meta("p", p);
    m.meta("delta", delta);
    write_ball_meta(&mut m, balls);
    inst.write_edge_meta(&mut m);
    for family in [
        "z", "lam0", "lam1", "xi0", "xi1", "w", "X", "pi0", "pi1", "eta", "y",
    ] {
        let c = m.count_family(family);
        m.meta(&format!("count.{family}"), c);
    }
    m.record_counts();
    Ok(m)
}

/// The edge-packing seed program: binaries `z[j,e]`, each edge in at most
/// one cluster, pair and triple conflicts forbidden inside a cluster.
pub fn build_seed_ilp(
    net: &Network,
    table: &IncompatibilityTable,
    p: usize,
) -> Result<ConicModel, ExportError> {
    if p == 0 {
        return Err(ExportError::NoDevices);
    }
    let inst = ModelInstance::from_network("network", net);
    let n = inst.edges.len();
    let mut m = ConicModel::empty(ObjSense::Maximize);
    let z: Vec<Vec<usize>> = (1..=p)
        .map(|j| (0..n).map(|e| m.binary(format!("z[{j},{e}]"))).collect())
        .collect();
    for j in 0..p {
        for (e, edge) in inst.edges.iter().enumerate() {
            m.objective
                .expr
                .coeffs
                .push((z[j][e], edge.weighted_length()));
        }
    }
    for e in 0..n {
        m.row(
            format!("once[{e}]"),
            (0..p).map(|j| (z[j][e], 1.0)).collect(),
            Sense::Le,
            1.0,
        );
    }
    for j in 0..p {
        for &(a, b) in &table.pairs {
            m.row(
                format!("helly[{},{a},{b}]", j + 1),
                vec![(z[j][a], 1.0), (z[j][b], 1.0)],
                Sense::Le,
                1.0,
            );
        }
        for &(a, b, c) in &table.triples {
            let coeffs = vec![(z[j][a], 1.0), (z[j][b], 1.0), (z[j][c], 1.0)];
            m.row(
                format!("helly[{},{a},{b},{c}]", j + 1),
                coeffs,
                Sense::Le,
                2.0,
            );
        }
    }
    m.meta("model", "seed");
    m.meta("p", p);
    write_ball_meta(&mut m, &vec![table.ball; p]);
    inst.write_edge_meta(&mut m);
    m.record_counts();
    Ok(m)
}

// ---------------------------------------------------------------------------
// text format

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFormat {
    ConicText,
}

const HEADER: &str = "conic_text 1";

fn push_terms(out: &mut String, coeffs: &[(usize, f64)], vars: &[Variable]) {
    for &(v, c) in coeffs {
        let _ = write!(out, " {c} {}", vars[v].name);
    }
}

/// Deterministic text form; see `docs/format.md`.
pub fn serialize(model: &ConicModel, _format: ModelFormat) -> String {
    let vars = &model.variables;
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "VARS {}", vars.len());
    for v in vars {
        let kind = if v.kind == VarKind::Binary { "B" } else { "C" };
        let _ = writeln!(out, "{} {kind} {} {}", v.name, v.lb, v.ub);
    }
    let sense = if model.objective.sense == ObjSense::Maximize {
        "max"
    } else {
        "min"
    };
    let _ = write!(
        out,
        "OBJ {sense} {} {}",
        model.objective.expr.constant,
        model.objective.expr.coeffs.len()
    );
    push_terms(&mut out, &model.objective.expr.coeffs, vars);
    out.push('\n');
    let _ = writeln!(out, "LIN {}", model.linear.len());
    for r in &model.linear {
        let _ = write!(
            out,
            "{} {} {} {}",
            r.name,
            r.sense.as_str(),
            r.rhs,
            r.coeffs.len()
        );
        push_terms(&mut out, &r.coeffs, vars);
        out.push('\n');
    }
    let _ = writeln!(out, "SOC {}", model.soc.len());
    for c in &model.soc {
        let _ = writeln!(out, "{} {}", c.name, c.lhs.len());
        for (tag, a) in std::iter::once(("t", &c.rhs)).chain(c.lhs.iter().map(|a| ("u", a))) {
            let _ = write!(out, "{tag} {} {}", a.constant, a.coeffs.len());
            push_terms(&mut out, &a.coeffs, vars);
            out.push('\n');
        }
    }
    let _ = writeln!(out, "META {}", model.metadata.len());
    for (k, v) in &model.metadata {
        let _ = writeln!(out, "{k} {v}");
    }
    out.push_str("END\n");
    out
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, ExportError> {
        let (i, line) = self.iter.next().ok_or(ExportError::Parse {
            line: self.last + 1,
            msg: "unexpected end".into(),
        })?;
        self.last = i + 1;
        Ok(line)
    }

    fn err(&self, msg: impl Into<String>) -> ExportError {
        ExportError::Parse {
            line: self.last,
            msg: msg.into(),
        }
    }

    fn section(&mut self, tag: &str) -> Result<usize, ExportError> {
        let line = self.next()?;
        let rest = line
            .strip_prefix(tag)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected {tag}")))?;
        rest.parse().map_err(|_| self.err("bad count"))
    }
}

fn num(tok: Option<&str>, lines: &Lines) -> Result<f64, ExportError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.err("expected number"))
}

fn count(tok: Option<&str>, lines: &Lines) -> Result<usize, ExportError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| lines.err("expected count"))
}

fn terms<'a>(
    toks: &mut impl Iterator<Item = &'a str>,
    k: usize,
    lookup: &HashMap<String, usize>,
    lines: &Lines,
) -> Result<Vec<(usize, f64)>, ExportError> {
    (0..k)
        .map(|_| {
            let c = num(toks.next(), lines)?;
            let name = toks.next().ok_or_else(|| lines.err("expected variable"))?;
            let v = *lookup
                .get(name)
                .ok_or_else(|| lines.err(format!("unknown variable {name}")))?;
            Ok((v, c))
        })
        .collect()
}

fn affine_line(
    line: &str,
    tag: &str,
    lookup: &HashMap<String, usize>,
    lines: &Lines,
) -> Result<Affine, ExportError> {
    let mut toks = line.split(' ');
    if toks.next() != Some(tag) {
        return Err(lines.err(format!("expected {tag}")));
    }
    let constant = num(toks.next(), lines)?;
    let k = count(toks.next(), lines)?;
    let coeffs = terms(&mut toks, k, lookup, lines)?;
    Ok(Affine { coeffs, constant })
}

/// Inverse of [`serialize`].
pub fn parse(text: &str) -> Result<ConicModel, ExportError> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
        last: 0,
    };
    if lines.next()? != HEADER {
        return Err(lines.err("bad header"));
    }
    let mut m = ConicModel::empty(ObjSense::Maximize);
    for _ in 0..lines.section("VARS")? {
        let line = lines.next()?;
        let mut toks = line.split(' ');
        let name = toks
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| lines.err("expected name"))?;
        let kind = match toks.next() {
            Some("B") => VarKind::Binary,
            Some("C") => VarKind::Continuous,
            _ => return Err(lines.err("expected kind B or C")),
        };
        let (lb, ub) = (num(toks.next(), &lines)?, num(toks.next(), &lines)?);
        m.var(name.to_string(), kind, lb, ub);
    }
    let line = lines.next()?;
    let mut toks = line.split(' ');
    if toks.next() != Some("OBJ") {
        return Err(lines.err("expected OBJ"));
    }
    m.objective.sense = match toks.next() {
        Some("max") => ObjSense::Maximize,
        Some("min") => ObjSense::Minimize,
        _ => return Err(lines.err("expected max or min")),
    };
    m.objective.expr.constant = num(toks.next(), &lines)?;
    let k = count(toks.next(), &lines)?;
    m.objective.expr.coeffs = terms(&mut toks, k, &m.lookup, &lines)?;
    for _ in 0..lines.section("LIN")? {
        let line = lines.next()?;
        let mut toks = line.split(' ');
        let name = toks
            .next()
            .ok_or_else(|| lines.err("expected row name"))?
            .to_string();
        let sense = match toks.next() {
            Some("le") => Sense::Le,
            Some("ge") => Sense::Ge,
            Some("eq") => Sense::Eq,
            _ => return Err(lines.err("expected le, ge or eq")),
        };
        let rhs = num(toks.next(), &lines)?;
        let k = count(toks.next(), &lines)?;
        let coeffs = terms(&mut toks, k, &m.lookup, &lines)?;
        m.linear.push(LinearRow {
            name,
            coeffs,
            sense,
            rhs,
        });
    }
    for _ in 0..lines.section("SOC")? {
        let line = lines.next()?;
        let (name, dim) = line
            .split_once(' ')
            .ok_or_else(|| lines.err("expected cone header"))?;
        let dim: usize = dim.parse().map_err(|_| lines.err("bad cone dimension"))?;
        let rhs = affine_line(lines.next()?, "t", &m.lookup, &lines)?;
        let lhs = (0..dim)
            .map(|_| affine_line(lines.next()?, "u", &m.lookup, &lines))
            .collect::<Result<_, _>>()?;
        m.soc.push(SocRow {
            name: name.to_string(),
            lhs,
            rhs,
        });
    }
    for _ in 0..lines.section("META")? {
        let line = lines.next()?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| lines.err("expected key and value"))?;
        m.metadata.insert(k.to_string(), v.to_string());
    }
    if lines.next()? != "END" {
        return Err(lines.err("expected END"));
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// assignments

pub type Assignment = BTreeMap<String, f64>;

fn model_balls(model: &ConicModel) -> Result<Vec<Ball>, ExportError> {
    let p: usize = model.meta_get("p")?;
    (1..=p)
        .map(|j| {
            let r: f64 = model.meta_get(&format!("device.{j}.radius"))?;
            let norm: Norm = model.meta_get(&format!("device.{j}.norm"))?;
            Ball::new(norm, r).map_err(|_| ExportError::Metadata(format!("device.{j}.radius")))
        })
        .collect()
}

/// Model variables for a geometric placement: touched edges from ball
/// intersections, λ from the clipped window, ξ by sorting the λ-values with
/// ties ordered untouched-first, then by `(device, end)`, and `w_{eℓ} = 1`
/// when a touching device with a window of positive length spans
/// subsegment `ℓ`.
///
/// Devices are reordered by `x + y` to satisfy the symmetry rows; unused
/// device slots repeat the last device (or are deactivated for the partial
/// cover model).
pub fn assignment_from_placement(
    model: &ConicModel,
    net: &Network,
    placement: &Placement,
) -> Result<Assignment, ExportError> {
    let kind: String = model.meta_get("model")?;
    let balls = model_balls(model)?;
    let mut out = Assignment::new();
    let segments = net.segments();
    let n = segments.len();
    let window = |x: Point, ball: &Ball, e: usize| clip_segment(x, ball, &segments[e]);
    match kind.as_str() {
        "single" => {
            let x = placement
                .devices
                .first()
                .map(|d| d.position)
                .ok_or(ExportError::NoDevices)?;
            for e in 0..n {
                let (z, (l0, l1)) = window(x, &balls[0], e).map_or((0.0, (0.0, 0.0)), |w| (1.0, w));
                out.insert(format!("z[{e}]"), z);
                out.insert(format!("lam0[{e}]"), l0);
                out.insert(format!("lam1[{e}]"), l1);
            }
            out.insert("X[1]".into(), x.x);
            out.insert("X[2]".into(), x.y);
        }
        "multi" => {
            let p = balls.len();
            let partial = model.metadata.get("problem").map(String::as_str) == Some("psnlclp");
            let mut xs: Vec<Point> = placement.devices.iter().map(|d| d.position).collect();
            if xs.len() > p {
                return Err(ExportError::Unsupported(format!(
                    "placement has {} devices, model {p}",
                    xs.len()
                )));
            }
            xs.sort_by(|a, b| (a.x + a.y).total_cmp(&(b.x + b.y)));
            let active = xs.len();
            let filler = xs.last().copied().unwrap_or_else(|| segments[0].a);
            xs.resize(p, filler);
            let positions = 2 * p;
            // λ per device and edge; inactive partial-cover slots touch nothing
            let mut lam = vec![vec![None; n]; p];
            for j in 0..p {
                let on = !(partial && j >= active);
                for e in 0..n {
                    lam[j][e] = if on {
                        window(xs[j], &balls[j], e)
                    } else {
                        None
                    };
                }
                out.insert(format!("X[{},1]", j + 1), xs[j].x);
                out.insert(format!("X[{},2]", j + 1), xs[j].y);
                if partial {
                    out.insert(format!("y[{}]", j + 1), if j < active { 1.0 } else { 0.0 });
                }
            }
            for e in 0..n {
                // (value, touched, device, end): untouched zeros sort first
                let mut order: Vec<(f64, bool, usize, usize)> = Vec::with_capacity(positions);
                for (j, row) in lam.iter().enumerate() {
                    let (z, (l0, l1)) = row[e].map_or((0.0, (0.0, 0.0)), |w| (1.0, w));
                    out.insert(format!("z[{},{e}]", j + 1), z);
                    out.insert(format!("lam0[{},{e}]", j + 1), l0);
                    out.insert(format!("lam1[{},{e}]", j + 1), l1);
                    order.extend([(l0, z > 0.5, j, 0), (l1, z > 0.5, j, 1)]);
                }
                order.sort_by(|a, b| {
                    a.0.total_cmp(&b.0)
                        .then(a.1.cmp(&b.1))
                        .then(a.2.cmp(&b.2))
                        .then(a.3.cmp(&b.3))
                });
                let mut rank = vec![[0usize; 2]; p];
                for (pos, &(_, _, j, s)) in order.iter().enumerate() {
                    rank[j][s] = pos;
                }
                for j in 0..p {
                    for l in 0..positions {
                        for s in 0..2 {
                            let hit = rank[j][s] == l;
                            let lv = if s == 0 {
                                out[&format!("lam0[{},{e}]", j + 1)]
                            } else {
                                out[&format!("lam1[{},{e}]", j + 1)]
                            };
                            out.insert(
                                format!("xi{s}[{},{e},{}]", j + 1, l + 1),
                                if hit { 1.0 } else { 0.0 },
                            );
                            out.insert(
                                format!("pi{s}[{},{e},{}]", j + 1, l + 1),
                                if hit { lv } else { 0.0 },
                            );
                        }
                    }
                }
                for l in 0..positions - 1 {
                    let spans = (0..p).any(|j| match lam[j][e] {
                        Some((l0, l1)) => l1 > l0 && rank[j][0] <= l && rank[j][1] > l,
                        None => false,
                    });
                    let diff = order[l + 1].0 - order[l].0;
                    out.insert(format!("w[{e},{}]", l + 1), if spans { 1.0 } else { 0.0 });
                    out.insert(
                        format!("eta[{e},{}]", l + 1),
                        if spans { diff } else { 0.0 },
                    );
                }
            }
        }
        other => {
            return Err(ExportError::Unsupported(format!(
                "no placement mapping for model {other}"
            )))
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: String,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub feasible: bool,
    /// Rows, bounds and integrality requirements violated beyond [`CHECK_TOL`].
    pub violations: Vec<Violation>,
    pub objective: f64,
    /// `Σ ω_e L_e η_{eℓ}`, the coverage the model accounts for (multi models).
    pub model_coverage: Option<f64>,
    /// Coverage recomputed geometrically from the device positions.
    pub report: Option<CoverageReport>,
    /// `report − model_coverage`: positive when the model under-counts.
    pub coverage_gap: Option<f64>,
    /// Subsegments marked covered although no single touching device spans
    /// them.
    pub unsupported_w: Vec<String>,
}

/// Checks an external assignment against every row and against the
/// geometric truth.
pub fn verify_solution(
    model: &ConicModel,
    net: &Network,
    assignment: &Assignment,
) -> Result<Verification, ExportError> {
    let missing: Vec<String> = model
        .variables
        .iter()
        .filter(|v| !assignment.contains_key(&v.name))
        .map(|v| v.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(ExportError::MissingVariables(missing));
    }
    let x: Vec<f64> = model
        .variables
        .iter()
        .map(|v| assignment[&v.name])
        .collect();
    let mut violations = Vec::new();
    for (v, &val) in model.variables.iter().zip(&x) {
        let out = (v.lb - val).max(val - v.ub).max(0.0);
        if out > CHECK_TOL {
            violations.push(Violation {
                row: format!("bound:{}", v.name),
                amount: out,
            });
        }
        if v.kind == VarKind::Binary && (val - val.round()).abs() > CHECK_TOL {
            violations.push(Violation {
                row: format!("integral:{}", v.name),
                amount: (val - val.round()).abs(),
            });
        }
    }
    for r in &model.linear {
        let lhs: f64 = r.coeffs.iter().map(|&(v, c)| c * x[v]).sum();
        let amount = match r.sense {
            Sense::Le => lhs - r.rhs,
            Sense::Ge => r.rhs - lhs,
            Sense::Eq => (lhs - r.rhs).abs(),
        };
        if amount > CHECK_TOL {
            violations.push(Violation {
                row: r.name.clone(),
                amount,
            });
        }
    }
    for c in &model.soc {
        let norm = c
            .lhs
            .iter()
            .map(|a| a.value(&x).powi(2))
            .sum::<f64>()
            .sqrt();
        let amount = norm - c.rhs.value(&x);
        if amount > CHECK_TOL {
            violations.push(Violation {
                row: c.name.clone(),
                amount,
            });
        }
    }
    let objective = model.objective.expr.value(&x);
    let kind: String = model.meta_get("model")?;
    let balls = model_balls(model)?;
    let (mut model_coverage, mut report, mut unsupported_w) = (None, None, Vec::new());
    match kind.as_str() {
        "single" => {
            let d = Device::new(Point::new(assignment["X[1]"], assignment["X[2]"]), balls[0]);
            report = Some(evaluate(net, &Placement::new(vec![d])));
            model_coverage = Some(objective);
        }
        "multi" => {
            let p = balls.len();
            let partial = model.metadata.get("problem").map(String::as_str) == Some("psnlclp");
            let devices: Vec<Device> = (1..=p)
                .filter(|j| !partial || assignment[&format!("y[{j}]")] > 0.5)
                .map(|j| {
                    Device::new(
                        Point::new(
                            assignment[&format!("X[{j},1]")],
                            assignment[&format!("X[{j},2]")],
                        ),
                        balls[j - 1],
                    )
                })
                .collect();
            report = Some(evaluate(net, &Placement::new(devices)));
            let positions = 2 * p;
            let mut cov = 0.0;
            for e in 0..net.num_edges() {
                for l in 1..positions {
                    cov += net.weighted_length(e) * assignment[&format!("eta[{e},{l}]")];
                    if assignment[&format!("w[{e},{l}]")] > 0.5 {
                        let spanned = (1..=p).any(|j| {
                            let before: f64 = (1..=l)
                                .map(|i| assignment[&format!("xi0[{j},{e},{i}]")])
                                .sum();
                            let after: f64 = (l + 1..=positions)
                                .map(|i| assignment[&format!("xi1[{j},{e},{i}]")])
                                .sum();
                            assignment[&format!("z[{j},{e}]")] > 0.5 && before > 0.5 && after > 0.5
                        });
                        if !spanned {
                            unsupported_w.push(format!("w[{e},{l}]"));
                        }
                    }
                }
            }
            model_coverage = Some(cov);
        }
        _ => {}
    }
    let coverage_gap = match (&report, model_coverage) {
        (Some(r), Some(c)) => Some(r.covered_weighted_length - c),
        _ => None,
    };
    Ok(Verification {
        feasible: violations.is_empty(),
        violations,
        objective,
        model_coverage,
        report,
        coverage_gap,
        unsupported_w,
    })
}
