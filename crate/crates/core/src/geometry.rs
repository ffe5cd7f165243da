//! Planar primitives: points, segments, norm balls, distances, ball/segment
//! clipping, stadium membership and the minimax slack `epsilon_star`.
//!
//! A segment is parameterized as `a + λ (b - a)` with `λ ∈ [0, 1]`, so `λ = 0`
//! is the origin node of an edge and `λ = 1` its target node.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Segments shorter than this are treated as a single point.
pub const DEGENERATE_LENGTH: f64 = 1e-12;

/// Discriminant band (in squared length units, after normalizing the
/// direction) inside which a circle/segment meeting is reported as tangent.
pub const TANGENT_DISCRIMINANT: f64 = 1e-12;

/// Stadium-intersection slack threshold: a set of stadiums is considered to
/// intersect when its minimax slack does not exceed this value.
pub const TOL_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate segment ({0} -> {1})")]
    DegenerateSegment(Point, Point),
    #[error("empty segment list")]
    EmptySegmentList,
    #[error("ball radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("unknown norm `{0}` (expected l1, l2 or linf)")]
    UnknownNorm(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_in(self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => self.x.abs() + self.y.abs(),
            Norm::L2 => self.norm(),
            Norm::LInf => self.x.abs().max(self.y.abs()),
        }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn direction(&self) -> Point {
        self.b - self.a
    }

    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    pub fn is_degenerate(&self) -> bool {
        self.length() <= DEGENERATE_LENGTH
    }

    pub fn point_at(&self, lambda: f64) -> Point {
        self.a + self.direction() * lambda
    }

    /// The part of the segment between parameters `lo` and `hi`.
    pub fn sub_segment(&self, lo: f64, hi: f64) -> Segment {
        Segment::new(self.point_at(lo), self.point_at(hi))
    }

    fn check(&self) -> Result<(), GeometryError> {
        if self.is_degenerate() {
            Err(GeometryError::DegenerateSegment(self.a, self.b))
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::LInf => "linf",
        }
    }

    /// Outward normals `n` of the unit ball written as `{v : n·v <= 1}`.
    /// Only defined for the polyhedral norms.
    pub(crate) fn facet_normals(self) -> Option<[Point; 4]> {
        match self {
            Norm::L1 => Some([
                Point::new(1.0, 1.0),
                Point::new(1.0, -1.0),
                Point::new(-1.0, 1.0),
                Point::new(-1.0, -1.0),
            ]),
            Norm::LInf => Some([
                Point::new(1.0, 0.0),
                Point::new(-1.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(0.0, -1.0),
            ]),
            Norm::L2 => None,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Norm {
    type Err = GeometryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l_inf" | "inf" => Ok(Norm::LInf),
            _ => Err(GeometryError::UnknownNorm(s.to_string())),
        }
    }
}

/// Coverage shape of a device: the closed ball of `radius` in `norm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub norm: Norm,
    pub radius: f64,
}

impl Ball {
    pub fn new(norm: Norm, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        Ok(Ball { norm, radius })
    }

    pub fn euclidean(radius: f64) -> Result<Self, GeometryError> {
        Ball::new(Norm::L2, radius)
    }

    pub fn contains(&self, center: Point, q: Point) -> bool {
        (q - center).norm_in(self.norm) <= self.radius
    }
}

/// Projection parameter of `q` onto the segment line, clamped to `[0, 1]`.
/// Degenerate segments yield 0.
fn clamped_projection(q: Point, s: &Segment) -> f64 {
    let d = s.direction();
    let len2 = d.dot(d);
    if len2 <= DEGENERATE_LENGTH * DEGENERATE_LENGTH {
        return 0.0;
    }
    ((q - s.a).dot(d) / len2).clamp(0.0, 1.0)
}

/// Euclidean distance from `q` to segment `s` and the clamped parameter of
/// the closest point, `min(max(0, μ), 1)` with `μ` the orthogonal projection.
pub fn point_segment_distance(q: Point, s: &Segment) -> Result<(f64, f64), GeometryError> {
    s.check()?;
    let mu = clamped_projection(q, s);
    Ok((q.distance(s.point_at(mu)), mu))
}

/// Distance from `q` to `s` measured in `norm`, with the parameter of a
/// closest point. Accepts degenerate segments.
///
/// For the polyhedral norms the distance along the segment is convex and
/// piecewise linear, so its minimum sits at an endpoint or a breakpoint.
pub fn point_segment_distance_in(q: Point, s: &Segment, norm: Norm) -> (f64, f64) {
    if norm == Norm::L2 {
        let mu = clamped_projection(q, s);
        return (q.distance(s.point_at(mu)), mu);
    }
    let v0 = s.a - q;
    let d = s.direction();
    let mut best = (v0.norm_in(norm), 0.0);
    let mut consider = |lambda: f64| {
        if (0.0..=1.0).contains(&lambda) {
            let v = (v0 + d * lambda).norm_in(norm);
            if v < best.0 {
                best = (v, lambda);
            }
        }
    };
    consider(1.0);
    // breakpoints: a component crosses zero, or (for l∞) |vx| = |vy|
    if d.x != 0.0 {
        consider(-v0.x / d.x);
    }
    if d.y != 0.0 {
        consider(-v0.y / d.y);
    }
    if norm == Norm::LInf {
        if d.x != d.y {
            consider((v0.y - v0.x) / (d.x - d.y));
        }
        if d.x != -d.y {
            consider(-(v0.x + v0.y) / (d.x + d.y));
        }
    }
    best
}

/// Parameters `(μ, μ')` of the intersection of the two supporting lines, if
/// they are not parallel.
fn line_intersection_params(s1: &Segment, s2: &Segment) -> Option<(f64, f64)> {
    let d1 = s1.direction();
    let d2 = s2.direction();
    let denom = d1.cross(d2);
    let scale = d1.norm() * d2.norm();
    if denom.abs() <= 1e-14 * scale {
        return None;
    }
    let w = s2.a - s1.a;
    Some((w.cross(d2) / denom, w.cross(d1) / denom))
}

/// Minimum Euclidean distance between two segments.
///
/// Zero when the segments cross; otherwise the minimum is attained at an
/// endpoint of one of them, so four endpoint-to-segment distances suffice.
pub fn segment_segment_distance(s1: &Segment, s2: &Segment) -> Result<f64, GeometryError> {
    s1.check()?;
    s2.check()?;
    Ok(segment_segment_closest(s1, s2).0)
}

/// Distance plus a pair of closest points (on `s1`, on `s2`).
pub(crate) fn segment_segment_closest(s1: &Segment, s2: &Segment) -> (f64, Point, Point) {
    if let Some((mu, mu2)) = line_intersection_params(s1, s2) {
        if (0.0..=1.0).contains(&mu) && (0.0..=1.0).contains(&mu2) {
            let p = s1.point_at(mu);
            return (0.0, p, p);
        }
    }
    let candidates = [
        (s2.a, s1, false),
        (s2.b, s1, false),
        (s1.a, s2, true),
        (s1.b, s2, true),
    ];
    let mut best = (f64::INFINITY, s1.a, s2.a);
    for (q, seg, q_on_first) in candidates {
        let foot = seg.point_at(clamped_projection(q, seg));
        let dist = q.distance(foot);
        if dist < best.0 {
            best = if q_on_first {
                (dist, q, foot)
            } else {
                (dist, foot, q)
            };
        }
    }
    best
}

/// Minimum distance between two segments in an arbitrary supported norm.
///
/// The difference set `{x - x' : x ∈ s1, x' ∈ s2}` is a parallelogram; the
/// answer is zero when it contains the origin and otherwise the distance
/// from the origin to its boundary.
pub fn segment_distance_in(s1: &Segment, s2: &Segment, norm: Norm) -> f64 {
    let d1 = s1.direction();
    let d2 = s2.direction();
    let v00 = s1.a - s2.a;
    let denom = d1.cross(-d2);
    if denom.abs() > 1e-14 * (d1.norm() * d2.norm()).max(f64::MIN_POSITIVE) {
        // solve v00 + λ d1 - λ' d2 = 0
        let rhs = -v00;
        let lambda = rhs.cross(-d2) / denom;
        let lambda2 = d1.cross(rhs) / denom;
        if (0.0..=1.0).contains(&lambda) && (0.0..=1.0).contains(&lambda2) {
            return 0.0;
        }
    }
    let v10 = v00 + d1;
    let v01 = v00 - d2;
    let v11 = v10 - d2;
    let origin = Point::default();
    [
        Segment::new(v00, v10),
        Segment::new(v10, v11),
        Segment::new(v11, v01),
        Segment::new(v01, v00),
    ]
    .iter()
    .map(|side| point_segment_distance_in(origin, side, norm).0)
    .fold(f64::INFINITY, f64::min)
}

/// Parameter range `[λ⁰, λ¹]` of the part of `s` inside the ball centered at
/// `center`, or `None` when they do not meet. Tangency yields `λ⁰ = λ¹`.
pub fn ball_segment_intersection(
    center: Point,
    ball: &Ball,
    s: &Segment,
) -> Result<Option<(f64, f64)>, GeometryError> {
    s.check()?;
    Ok(match ball.norm {
        Norm::L2 => circle_clip(center, ball.radius, s),
        norm => polytope_clip(center, ball.radius, norm, s),
    })
}

/// Unchecked variant used in hot loops where segments are known to be valid.
pub(crate) fn clip_segment(center: Point, ball: &Ball, s: &Segment) -> Option<(f64, f64)> {
    match ball.norm {
        Norm::L2 => circle_clip(center, ball.radius, s),
        norm => polytope_clip(center, ball.radius, norm, s),
    }
}

fn circle_clip(center: Point, radius: f64, s: &Segment) -> Option<(f64, f64)> {
    let d = s.direction();
    let len = d.norm();
    let u = d * (1.0 / len);
    let w = s.a - center;
    // |w + t u|² = R², t in length units along the segment
    let half_b = u.dot(w);
    let c = w.dot(w) - radius * radius;
    let disc = half_b * half_b - c;
    let (t0, t1) = if disc < -TANGENT_DISCRIMINANT {
        return None;
    } else if disc <= TANGENT_DISCRIMINANT {
        (-half_b, -half_b)
    } else {
        let root = disc.sqrt();
        (-half_b - root, -half_b + root)
    };
    if t1 < 0.0 || t0 > len {
        return None;
    }
    let lo = (t0 / len).clamp(0.0, 1.0);
    let hi = (t1 / len).clamp(0.0, 1.0);
    Some((lo, hi.max(lo)))
}

fn polytope_clip(center: Point, radius: f64, norm: Norm, s: &Segment) -> Option<(f64, f64)> {
    let normals = norm.facet_normals().expect("polyhedral norm");
    let d = s.direction();
    let w = s.a - center;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let scale = d.norm_in(Norm::L1);
    for n in normals {
        // n·(w + λ d) <= R
        let slack = radius - n.dot(w);
        let rate = n.dot(d);
        if rate.abs() <= 1e-15 * scale {
            if slack < -1e-12 * radius {
                return None;
            }
        } else if rate > 0.0 {
            hi = hi.min(slack / rate);
        } else {
            lo = lo.max(slack / rate);
        }
    }
    if lo > hi {
        if (lo - hi) * scale <= 1e-12 {
            let mid = 0.5 * (lo + hi);
            return Some((mid, mid));
        }
        return None;
    }
    Some((lo, hi))
}

/// Whether `q` lies in the Minkowski sum `s ⊕ B`, i.e. a device at `q`
/// touches the segment.
pub fn in_stadium(q: Point, s: &Segment, ball: &Ball) -> bool {
    let (dist, _) = point_segment_distance_in(q, s, ball.norm);
    match ball.norm {
        Norm::L2 => dist * dist <= ball.radius * ball.radius + TANGENT_DISCRIMINANT,
        _ => dist <= ball.radius * (1.0 + 1e-12),
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
fn golden_min(lo: f64, hi: f64, iterations: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    if b - a <= 0.0 {
        return (a, f(a));
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iterations {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

const MINIMAX_ITERATIONS: usize = 72;

/// Minimax slack of a family of stadiums in the Euclidean norm:
/// `min_X max_i δ(X, e_i) - R` together with a minimizing `X`.
///
/// The stadiums share a point exactly when the slack is non-positive.
pub fn epsilon_star(segments: &[Segment], radius: f64) -> Result<(f64, Point), GeometryError> {
    epsilon_star_in(segments, Norm::L2, radius)
}

/// [`epsilon_star`] for any supported norm.
///
/// `X ↦ max_i δ(X, e_i)` is convex, and clamping `X` to the bounding box of
/// the segments never increases any distance, so a nested golden-section
/// search over the box finds the global minimum.
pub fn epsilon_star_in(
    segments: &[Segment],
    norm: Norm,
    radius: f64,
) -> Result<(f64, Point), GeometryError> {
    if segments.is_empty() {
        return Err(GeometryError::EmptySegmentList);
    }
    let (mut min, mut max) = (segments[0].a, segments[0].a);
    for s in segments {
        for p in [s.a, s.b] {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
    }
    let value = |p: Point| {
        segments
            .iter()
            .map(|s| point_segment_distance_in(p, s, norm).0)
            .fold(0.0, f64::max)
    };
    let inner = |x: f64| {
        golden_min(min.y, max.y, MINIMAX_ITERATIONS, |y| {
            value(Point::new(x, y))
        })
    };
    let (x, _) = golden_min(min.x, max.x, MINIMAX_ITERATIONS, |x| inner(x).1);
    let (y, _) = inner(x);
    let center = Point::new(x, y);
    Ok((value(center) - radius, center))
}
