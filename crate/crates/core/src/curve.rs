//! Continuous, piecewise-smooth curves in ℝⁿ parameterized over [0, 1].
//!
//! A [`PiecewiseCurve`] is an ordered list of [`Segment`]s, each smooth on its
//! own local parameter `u ∈ [0, 1]`, glued at increasing global breakpoints.
//! Segments are either closed-form primitives or cubic Hermite splines.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, UnitRule};

/// Absolute tolerance on arc length.
pub const TAU_LEN: f64 = 1e-10;
/// Joins and closure must match to this distance.
pub const TAU_JOIN: f64 = 1e-9;
/// Minimum parameter separation between the two members of a self-intersection.
pub const TAU_SEP: f64 = 1e-4;
/// Target count of arclength-table cells per reparameterized segment.
pub const REPARAM_TABLE_CELLS: usize = 4096;

/// `center + cos_vec·cos θ + sin_vec·sin θ` for `θ` running linearly from
/// `theta0` to `theta1`. With zero center and orthonormal vectors this is a
/// great-circle arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleArc {
    pub center: Vec<f64>,
    pub cos_vec: Vec<f64>,
    pub sin_vec: Vec<f64>,
    pub theta0: f64,
    pub theta1: f64,
}

/// Coordinates in planes: `(A_j cos(2π k_j u + p_j), A_j sin(2π k_j u + p_j))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Winding {
    pub amplitudes: Vec<f64>,
    pub windings: Vec<f64>,
    pub phases: Vec<f64>,
}

/// Cubic Hermite spline through `points` at `knots` with derivatives
/// `tangents` taken with respect to the local parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteSpline {
    pub knots: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub tangents: Vec<Vec<f64>>,
}

/// `inner` with an extra unit circle factor whose angle runs linearly from
/// `phase0` to `phase1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WithCircle {
    pub inner: Box<Segment>,
    pub phase0: f64,
    pub phase1: f64,
}

/// `inner` traversed at constant speed. Only `inner` is serialized; the
/// arclength table is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ReparamRepr", into = "ReparamRepr")]
pub struct Reparameterized {
    inner: Box<Segment>,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
    edges: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReparamRepr {
    inner: Box<Segment>,
}

impl PartialEq for Reparameterized {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl TryFrom<ReparamRepr> for Reparameterized {
    type Error = Error;
    fn try_from(r: ReparamRepr) -> Result<Self> {
        Reparameterized::new(*r.inner)
    }
}

impl From<Reparameterized> for ReparamRepr {
    fn from(r: Reparameterized) -> Self {
        ReparamRepr { inner: r.inner }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Circle(CircleArc),
    Winding(Winding),
    Hermite(HermiteSpline),
    WithCircle(WithCircle),
    Reparameterized(Reparameterized),
}

impl Segment {
    pub fn great_circle(p: Vec<f64>, q: Vec<f64>, theta0: f64, theta1: f64) -> Self {
        let n = p.len();
        Segment::Circle(CircleArc {
            center: vec![0.0; n],
            cos_vec: p,
            sin_vec: q,
            theta0,
            theta1,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Segment::Circle(c) => c.center.len(),
            Segment::Winding(w) => 2 * w.amplitudes.len(),
            Segment::Hermite(h) => h.points.first().map_or(0, Vec::len),
            Segment::WithCircle(w) => w.inner.dim() + 2,
            Segment::Reparameterized(r) => r.inner.dim(),
        }
    }

    /// Checks the internal consistency of the segment's data.
    pub fn validate(&self) -> Result<()> {
        match self {
            Segment::Circle(c) => {
                let n = c.center.len();
                if n == 0 || c.cos_vec.len() != n || c.sin_vec.len() != n {
                    return Err(Error::domain("circle vectors must share a nonzero dimension"));
                }
                if !(c.theta0.is_finite() && c.theta1.is_finite()) {
                    return Err(Error::domain("circle angles must be finite"));
                }
            }
            Segment::Winding(w) => {
                let d = w.amplitudes.len();
                if d == 0 || w.windings.len() != d || w.phases.len() != d {
                    return Err(Error::domain("winding arrays must share a nonzero length"));
                }
            }
            Segment::Hermite(h) => {
                let m = h.knots.len();
                if m < 2 || h.points.len() != m || h.tangents.len() != m {
                    return Err(Error::domain("hermite spline needs ≥2 knots with matching points and tangents"));
                }
                let n = h.points[0].len();
                if n == 0 || h.points.iter().chain(&h.tangents).any(|p| p.len() != n) {
                    return Err(Error::domain("hermite points and tangents must share one dimension"));
                }
                if h.knots[0] != 0.0 || h.knots[m - 1] != 1.0 || h.knots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::domain("hermite knots must increase strictly from 0 to 1"));
                }
            }
            Segment::WithCircle(w) => w.inner.validate()?,
            Segment::Reparameterized(r) => r.inner.validate()?,
        }
        Ok(())
    }

    /// Writes position and derivative at local parameter `u` into `pos`, `vel`.
    pub fn eval_into(&self, u: f64, pos: &mut [f64], vel: &mut [f64]) {
        match self {
            Segment::Circle(c) => {
                let dth = c.theta1 - c.theta0;
                let (s, co) = (c.theta0 + dth * u).sin_cos();
                for i in 0..c.center.len() {
                    pos[i] = c.center[i] + c.cos_vec[i] * co + c.sin_vec[i] * s;
                    vel[i] = dth * (c.sin_vec[i] * co - c.cos_vec[i] * s);
                }
            }
            Segment::Winding(w) => {
                for j in 0..w.amplitudes.len() {
                    let omega = 2.0 * PI * w.windings[j];
                    let (s, co) = (omega * u + w.phases[j]).sin_cos();
                    let a = w.amplitudes[j];
                    pos[2 * j] = a * co;
                    pos[2 * j + 1] = a * s;
                    vel[2 * j] = -a * omega * s;
                    vel[2 * j + 1] = a * omega * co;
                }
            }
            Segment::Hermite(h) => h.eval_into(u, pos, vel),
            Segment::WithCircle(w) => {
                let n = w.inner.dim();
                w.inner.eval_into(u, &mut pos[..n], &mut vel[..n]);
                let dph = w.phase1 - w.phase0;
                let (s, co) = (w.phase0 + dph * u).sin_cos();
                pos[n] = co;
                pos[n + 1] = s;
                vel[n] = -dph * s;
                vel[n + 1] = dph * co;
            }
            Segment::Reparameterized(r) => r.eval_into(u, pos, vel),
        }
    }

    pub fn eval(&self, u: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        self.eval_into(u, &mut p, &mut v);
        (p, v)
    }

    /// Local parameters where the segment's data changes piece (always
    /// includes 0 and 1). Quadrature panels align with these.
    pub fn edges(&self) -> Vec<f64> {
        match self {
            Segment::Hermite(h) => h.knots.clone(),
            Segment::WithCircle(w) => w.inner.edges(),
            Segment::Reparameterized(r) => r.edges.clone(),
            _ => vec![0.0, 1.0],
        }
    }

    /// Rough number of oscillations over the segment, used to size
    /// initial quadrature and sampling grids.
    pub fn oscillation(&self) -> f64 {
        match self {
            Segment::Circle(c) => ((c.theta1 - c.theta0).abs() / (2.0 * PI)).max(1.0),
            Segment::Winding(w) => w.windings.iter().fold(1.0, |m, k| m.max(k.abs())),
            Segment::Hermite(_) => 1.0,
            Segment::WithCircle(w) => w.inner.oscillation().max((w.phase1 - w.phase0).abs() / (2.0 * PI)),
            Segment::Reparameterized(r) => r.inner.oscillation(),
        }
    }

    fn speed(&self, u: f64, pos: &mut [f64], vel: &mut [f64]) -> f64 {
        self.eval_into(u, pos, vel);
        norm(vel)
    }

    /// Length of the segment over its full local domain.
    pub fn length(&self) -> Result<f64> {
        let edges = self.edges();
        let intervals: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
        let n = self.dim();
        let panels = initial_panels(self.oscillation(), 1, intervals.len());
        let (len, _) = quadrature::integrate(&intervals, panels, TAU_LEN, |u| {
            let mut p = vec![0.0; n];
            let mut v = vec![0.0; n];
            self.speed(u, &mut p, &mut v)
        })?;
        Ok(len)
    }
}

impl HermiteSpline {
    /// Samples `f(u) = (position, derivative)` at `knots`.
    pub fn from_fn(knots: Vec<f64>, mut f: impl FnMut(f64) -> (Vec<f64>, Vec<f64>)) -> Self {
        let (points, tangents) = knots.iter().map(|&u| f(u)).unzip();
        Self { knots, points, tangents }
    }

    pub fn uniform_knots(cells: usize) -> Vec<f64> {
        let mut k: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        k[cells] = 1.0;
        k
    }

    fn eval_into(&self, u: f64, pos: &mut [f64], vel: &mut [f64]) {
        let m = self.knots.len();
        let u = u.clamp(0.0, 1.0);
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&u).unwrap()) {
            Ok(i) => i.min(m - 2),
            Err(i) => (i.max(1) - 1).min(m - 2),
        };
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let h = k1 - k0;
        let t = (u - k0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let (p0, p1) = (&self.points[i], &self.points[i + 1]);
        let (m0, m1) = (&self.tangents[i], &self.tangents[i + 1]);
        for j in 0..pos.len() {
            pos[j] = h00 * p0[j] + h10 * h * m0[j] + h01 * p1[j] + h11 * h * m1[j];
            vel[j] = d00 * p0[j] + d10 * m0[j] + d01 * p1[j] + d11 * m1[j];
        }
    }
}

impl Reparameterized {
    pub fn new(inner: Segment) -> Result<Self> {
        inner.validate()?;
        // reparameterizing twice only needs the original
        let inner = match inner {
            Segment::Reparameterized(r) => *r.inner,
            other => other,
        };
        let inner_edges = inner.edges();
        let per = (REPARAM_TABLE_CELLS / (inner_edges.len() - 1)).max(2);
        let mut grid = Vec::with_capacity((inner_edges.len() - 1) * per + 1);
        grid.push(0.0);
        for w in inner_edges.windows(2) {
            for k in 1..=per {
                grid.push(if k == per { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / per as f64 });
            }
        }
        let rule = UnitRule::new(12);
        let n = inner.dim();
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(0.0);
        for w in grid.windows(2) {
            let piece = rule.integrate(w[0], w[1], |u| inner.speed(u, &mut p, &mut v));
            cumulative.push(cumulative.last().unwrap() + piece);
        }
        let total = *cumulative.last().unwrap();
        if !(total > 0.0) {
            return Err(Error::Degenerate("segment has zero length".into()));
        }
        let cell_floor = total * 1e-12;
        if cumulative.windows(2).any(|w| w[1] - w[0] <= cell_floor) {
            return Err(Error::Degenerate(
                "velocity vanishes on a set of positive measure".into(),
            ));
        }
        let mut r = Self {
            inner: Box::new(inner),
            grid,
            cumulative,
            edges: Vec::new(),
        };
        let mut edges: Vec<f64> = inner_edges.iter().map(|&e| r.arclength_at(e) / total).collect();
        edges[0] = 0.0;
        *edges.last_mut().unwrap() = 1.0;
        r.edges = edges;
        Ok(r)
    }

    pub fn inner(&self) -> &Segment {
        &self.inner
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arc length of the inner segment from 0 to inner parameter `sigma`.
    pub fn arclength_at(&self, sigma: f64) -> f64 {
        let sigma = sigma.clamp(0.0, 1.0);
        let i = match self.grid.binary_search_by(|g| g.partial_cmp(&sigma).unwrap()) {
            Ok(i) => return self.cumulative[i],
            Err(i) => i - 1,
        };
        let n = self.inner.dim();
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        let rule = short_rule();
        self.cumulative[i] + rule.integrate(self.grid[i], sigma, |u| self.inner.speed(u, &mut p, &mut v))
    }

    /// Inner parameter at which the arc length reaches `fraction` of the total.
    pub fn inverse(&self, fraction: f64) -> f64 {
        let total = self.total_length();
        let target = fraction.clamp(0.0, 1.0) * total;
        let last = self.grid.len() - 1;
        let i = match self.cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
            Ok(i) => return self.grid[i],
            Err(i) => (i.max(1) - 1).min(last - 1),
        };
        let (g0, g1) = (self.grid[i], self.grid[i + 1]);
        let (c0, c1) = (self.cumulative[i], self.cumulative[i + 1]);
        let mut lo = g0;
        let mut hi = g1;
        let mut sigma = g0 + (g1 - g0) * (target - c0) / (c1 - c0);
        let n = self.inner.dim();
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        let rule = short_rule();
        for _ in 0..30 {
            let s_val = c0 + rule.integrate(g0, sigma, |u| self.inner.speed(u, &mut p, &mut v));
            let f = s_val - target;
            if f > 0.0 {
                hi = sigma;
            } else {
                lo = sigma;
            }
            if f.abs() <= 1e-15 * total.max(1.0) {
                break;
            }
            let speed = self.inner.speed(sigma, &mut p, &mut v);
            let mut next = if speed > 0.0 { sigma - f / speed } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - sigma).abs() < 1e-17 {
                sigma = next;
                break;
            }
            sigma = next;
        }
        sigma
    }

    fn eval_into(&self, u: f64, pos: &mut [f64], vel: &mut [f64]) {
        let sigma = self.inverse(u);
        self.inner.eval_into(sigma, pos, vel);
        let speed = norm(vel);
        let total = self.total_length();
        if speed > 0.0 {
            let k = total / speed;
            vel.iter_mut().for_each(|x| *x *= k);
        }
    }
}

fn short_rule() -> &'static UnitRule {
    static RULE: std::sync::OnceLock<UnitRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| UnitRule::new(10))
}

/// Initial panels per interval for an integrand of polynomial degree
/// `degree` along a segment oscillating `osc` times, spread over `intervals`.
pub fn initial_panels(osc: f64, degree: usize, intervals: usize) -> usize {
    let nodes = (4.0 * degree.max(1) as f64 * osc).max(32.0);
    let per = (nodes / (quadrature::PANEL_NODES as f64 * intervals as f64)).ceil();
    (per as usize).max(1)
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A continuous curve made of smooth segments over `breakpoints`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCurve {
    segments: Vec<Segment>,
    breakpoints: Vec<f64>,
    ambient_dim: usize,
    closed: bool,
    declared_self_intersections: Option<Vec<f64>>,
}

impl PiecewiseCurve {
    /// A closed curve; joins and closure are validated.
    pub fn new(segments: Vec<Segment>, breakpoints: Vec<f64>) -> Result<Self> {
        let c = Self::build(segments, breakpoints, true)?;
        let gap = c.closure_gap();
        if gap > TAU_JOIN {
            return Err(Error::Construction {
                what: "curve is not closed".into(),
                gap,
            });
        }
        Ok(c)
    }

    /// A curve whose endpoints need not coincide.
    pub fn new_open(segments: Vec<Segment>, breakpoints: Vec<f64>) -> Result<Self> {
        Self::build(segments, breakpoints, false)
    }

    pub fn single(segment: Segment) -> Result<Self> {
        Self::new(vec![segment], vec![0.0, 1.0])
    }

    /// Closed curve with breakpoints proportional to segment lengths.
    pub fn from_segments_by_length(segments: Vec<Segment>) -> Result<Self> {
        let lengths = segments.iter().map(Segment::length).collect::<Result<Vec<_>>>()?;
        let total: f64 = lengths.iter().sum();
        let m = segments.len();
        let mut bp = vec![0.0];
        let mut acc = 0.0;
        for (i, l) in lengths.iter().enumerate() {
            acc += if total > 0.0 { l / total } else { 1.0 / m as f64 };
            bp.push(if i + 1 == m { 1.0 } else { acc });
        }
        Self::new(segments, bp)
    }

    fn build(segments: Vec<Segment>, breakpoints: Vec<f64>, closed: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::domain("curve needs at least one segment"));
        }
        if breakpoints.len() != segments.len() + 1 {
            return Err(Error::domain(format!(
                "{} segments need {} breakpoints, got {}",
                segments.len(),
                segments.len() + 1,
                breakpoints.len()
            )));
        }
        if breakpoints[0] != 0.0
            || *breakpoints.last().unwrap() != 1.0
            || breakpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::domain("breakpoints must increase strictly from 0 to 1"));
        }
        for s in &segments {
            s.validate()?;
        }
        let ambient_dim = segments[0].dim();
        if segments.iter().any(|s| s.dim() != ambient_dim) {
            return Err(Error::domain("segments disagree on ambient dimension"));
        }
        for (i, w) in segments.windows(2).enumerate() {
            let (end, _) = w[0].eval(1.0);
            let (start, _) = w[1].eval(0.0);
            let gap = dist(&end, &start);
            if gap > TAU_JOIN {
                return Err(Error::Construction {
                    what: format!("segments {i} and {} do not join", i + 1),
                    gap,
                });
            }
        }
        Ok(Self {
            segments,
            breakpoints,
            ambient_dim,
            closed,
            declared_self_intersections: None,
        })
    }

    pub fn with_declared_self_intersections(mut self, params: Vec<f64>) -> Result<Self> {
        if params.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::domain("self-intersection parameters must lie in [0, 1]"));
        }
        self.declared_self_intersections = Some(params);
        Ok(self)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn declared_self_intersections(&self) -> Option<&[f64]> {
        self.declared_self_intersections.as_deref()
    }

    pub fn closure_gap(&self) -> f64 {
        let (a, _) = self.segments[0].eval(0.0);
        let (b, _) = self.segments.last().unwrap().eval(1.0);
        dist(&a, &b)
    }

    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let m = self.segments.len();
        let i = match self.breakpoints.binary_search_by(|b| b.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(m - 1),
            Err(i) => (i - 1).min(m - 1),
        };
        let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        (i, (s - b0) / (b1 - b0), b1 - b0)
    }

    /// Position and velocity at `s`, taking the right limit at breakpoints.
    pub fn evaluate(&self, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("parameter {s} outside [0, 1]")));
        }
        let mut p = vec![0.0; self.ambient_dim];
        let mut v = vec![0.0; self.ambient_dim];
        self.eval_into(s, &mut p, &mut v);
        Ok((p, v))
    }

    /// Unchecked evaluation for hot loops; `s` is clamped to [0, 1].
    pub fn eval_into(&self, s: f64, pos: &mut [f64], vel: &mut [f64]) {
        let s = s.clamp(0.0, 1.0);
        let (i, u, width) = self.locate(s);
        self.segments[i].eval_into(u, pos, vel);
        let k = 1.0 / width;
        vel.iter_mut().for_each(|x| *x *= k);
    }

    pub fn position(&self, s: f64) -> Vec<f64> {
        let mut p = vec![0.0; self.ambient_dim];
        let mut v = vec![0.0; self.ambient_dim];
        self.eval_into(s, &mut p, &mut v);
        p
    }

    /// Global parameter intervals on which the curve is smooth, aligned with
    /// every segment's internal edges.
    pub fn smooth_intervals(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
            for w in seg.edges().windows(2) {
                out.push((b0 + (b1 - b0) * w[0], if w[1] == 1.0 { b1 } else { b0 + (b1 - b0) * w[1] }));
            }
        }
        out
    }

    /// Largest oscillation count of any segment.
    pub fn oscillation(&self) -> f64 {
        self.segments.iter().map(Segment::oscillation).fold(1.0, f64::max)
    }

    /// Initial panels per smooth interval for a degree-`degree` integrand.
    pub fn panels_for_degree(&self, degree: usize) -> usize {
        let intervals = self.smooth_intervals().len();
        let osc: f64 = self.segments.iter().map(Segment::oscillation).sum();
        initial_panels(osc, degree, intervals)
    }

    /// `∫₀¹ |γ'(s)| ds`.
    pub fn arc_length(&self) -> Result<f64> {
        self.arc_length_between(0.0, 1.0)
    }

    pub fn arc_length_between(&self, s0: f64, s1: f64) -> Result<f64> {
        let intervals: Vec<(f64, f64)> = self
            .smooth_intervals()
            .into_iter()
            .filter_map(|(a, b)| {
                let (lo, hi) = (a.max(s0), b.min(s1));
                (hi > lo).then_some((lo, hi))
            })
            .collect();
        if intervals.is_empty() {
            return Ok(0.0);
        }
        let n = self.ambient_dim;
        let panels = self.panels_for_degree(1);
        let (len, _) = quadrature::integrate(&intervals, panels, TAU_LEN, |s| {
            let mut p = vec![0.0; n];
            let mut v = vec![0.0; n];
            self.eval_into(s, &mut p, &mut v);
            norm(&v)
        })?;
        Ok(len)
    }

    /// Samples `(s, position, velocity)` at `count + 1` uniform parameters.
    pub fn sample(&self, count: usize) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        (0..=count)
            .map(|i| {
                let s = i as f64 / count as f64;
                let mut p = vec![0.0; self.ambient_dim];
                let mut v = vec![0.0; self.ambient_dim];
                self.eval_into(s, &mut p, &mut v);
                (s, p, v)
            })
            .collect()
    }

    /// The same image traversed with `|γ'| ≡ ℓ(γ)`.
    ///
    /// Each segment is wrapped in a [`Reparameterized`] segment and the new
    /// breakpoints sit at cumulative length fractions. Declared
    /// self-intersection parameters are carried through the same map.
    pub fn reparameterize_constant_speed(&self) -> Result<PiecewiseCurve> {
        let wrapped = self
            .segments
            .iter()
            .map(|s| Reparameterized::new(s.clone()))
            .collect::<Result<Vec<_>>>()?;
        let lengths: Vec<f64> = wrapped.iter().map(Reparameterized::total_length).collect();
        let total: f64 = lengths.iter().sum();
        let mut bp = vec![0.0];
        let mut acc = 0.0;
        for (i, l) in lengths.iter().enumerate() {
            acc += l;
            bp.push(if i + 1 == lengths.len() { 1.0 } else { acc / total });
        }
        let map = |s: f64| -> f64 {
            let (i, u, _) = self.locate(s.clamp(0.0, 1.0));
            let before: f64 = lengths[..i].iter().sum();
            ((before + wrapped[i].arclength_at(u)) / total).clamp(0.0, 1.0)
        };
        let declared = self
            .declared_self_intersections
            .as_ref()
            .map(|d| d.iter().map(|&s| map(s)).collect::<Vec<_>>());
        let mut out = Self::build(
            wrapped.into_iter().map(Segment::Reparameterized).collect(),
            bp,
            self.closed,
        )?;
        out.declared_self_intersections = declared;
        Ok(out)
    }

    /// Maximum relative deviation of `|γ'|` from its mean over `samples`
    /// interior sample points of each smooth interval.
    pub fn speed_deviation(&self, samples: usize) -> f64 {
        let speeds: Vec<f64> = (0..samples)
            .map(|i| {
                let s = (i as f64 + 0.5) / samples as f64;
                let mut p = vec![0.0; self.ambient_dim];
                let mut v = vec![0.0; self.ambient_dim];
                self.eval_into(s, &mut p, &mut v);
                norm(&v)
            })
            .collect();
        let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
        speeds.iter().map(|v| ((v - mean) / mean).abs()).fold(0.0, f64::max)
    }

    /// Parameter pairs `(s, s̃)`, `s < s̃`, where the curve meets itself.
    ///
    /// Candidates are found by hashing a uniform sample into cells sized by the
    /// maximum sample velocity, keeping pairs that are local minima of sampled
    /// distance, then refining each with damped Gauss–Newton on
    /// `|γ(s) − γ(s̃)|²`. Pairs whose cyclic parameter separation is below
    /// [`TAU_SEP`] are discarded, so the closure point is never reported.
    pub fn self_intersection_parameters(&self, tol: f64) -> Vec<(f64, f64)> {
        let edges = self.smooth_intervals().len();
        let n_samples = (4096usize)
            .max(4 * edges)
            .max((256.0 * self.oscillation()) as usize)
            .min(1 << 18);
        let n = self.ambient_dim;
        let pts: Vec<(Vec<f64>, f64)> = (0..n_samples)
            .map(|i| {
                let s = i as f64 / n_samples as f64;
                let mut p = vec![0.0; n];
                let mut v = vec![0.0; n];
                self.eval_into(s, &mut p, &mut v);
                let sp = norm(&v);
                (p, sp)
            })
            .collect();
        let vmax = pts.iter().map(|p| p.1).fold(0.0, f64::max) * 1.5 + 1e-300;
        let h = 1.0 / n_samples as f64;
        let radius = 2.0 * vmax * h + tol;
        if vmax * h < 1e-300 {
            return Vec::new();
        }
        let hashed = n.min(3);
        let key = |p: &[f64]| -> Vec<i64> { p[..hashed].iter().map(|x| (x / radius).floor() as i64).collect() };
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, (p, _)) in pts.iter().enumerate() {
            cells.entry(key(p)).or_default().push(i);
        }
        let cyc = |i: usize, j: usize| -> usize {
            let d = i.abs_diff(j);
            d.min(n_samples - d)
        };
        let d_at = |i: usize, j: usize| dist(&pts[i % n_samples].0, &pts[j % n_samples].0);
        let mut candidates = Vec::new();
        let mut offsets: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..hashed {
            offsets = offsets
                .into_iter()
                .flat_map(|o| (-1..=1).map(move |d| {
                    let mut o2 = o.clone();
                    o2.push(d);
                    o2
                }))
                .collect();
        }
        for (i, (p, _)) in pts.iter().enumerate() {
            let k = key(p);
            for off in &offsets {
                let nk: Vec<i64> = k.iter().zip(off).map(|(a, b)| a + b).collect();
                let Some(list) = cells.get(&nk) else { continue };
                for &j in list {
                    if j <= i || cyc(i, j) <= 3 {
                        continue;
                    }
                    let d = d_at(i, j);
                    if d > radius {
                        continue;
                    }
                    let ip = i + n_samples;
                    let jp = j + n_samples;
                    let local_min = d <= d_at(ip - 1, j)
                        && d <= d_at(ip + 1, j)
                        && d <= d_at(i, jp - 1)
                        && d <= d_at(i, jp + 1);
                    if local_min {
                        candidates.push((i as f64 * h, j as f64 * h));
                    }
                }
            }
        }
        let mut found: Vec<(f64, f64)> = Vec::new();
        for (s0, s1) in candidates {
            let Some((a, b, d)) = self.refine_pair(s0, s1, tol) else { continue };
            if d >= tol {
                continue;
            }
            let (mut a, mut b) = (a, b);
            if a > 1.0 - 1e-9 {
                a = 0.0;
            }
            if b > 1.0 - 1e-9 {
                b = 0.0;
            }
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let sep = (b - a).min(1.0 - (b - a));
            if sep < TAU_SEP {
                continue;
            }
            if !found.iter().any(|&(x, y)| (x - a).abs() < 1e-6 && (y - b).abs() < 1e-6) {
                found.push((a, b));
            }
        }
        found.sort_by(|x, y| x.partial_cmp(y).unwrap());
        found
    }

    fn refine_pair(&self, s0: f64, s1: f64, tol: f64) -> Option<(f64, f64, f64)> {
        let n = self.ambient_dim;
        let mut pa = vec![0.0; n];
        let mut va = vec![0.0; n];
        let mut pb = vec![0.0; n];
        let mut vb = vec![0.0; n];
        let (mut a, mut b) = (s0, s1);
        let mut lambda = 1e-6;
        let eval = |a: f64, b: f64, pa: &mut [f64], va: &mut [f64], pb: &mut [f64], vb: &mut [f64]| {
            self.eval_into(a, pa, va);
            self.eval_into(b, pb, vb);
            dist(pa, pb)
        };
        let mut d = eval(a, b, &mut pa, &mut va, &mut pb, &mut vb);
        for _ in 0..200 {
            if d < tol * 1e-3 {
                break;
            }
            let r: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
            let j11: f64 = va.iter().map(|x| x * x).sum();
            let j22: f64 = vb.iter().map(|x| x * x).sum();
            let j12: f64 = -va.iter().zip(&vb).map(|(x, y)| x * y).sum::<f64>();
            let g1: f64 = va.iter().zip(&r).map(|(x, y)| x * y).sum();
            let g2: f64 = -vb.iter().zip(&r).map(|(x, y)| x * y).sum::<f64>();
            let mut improved = false;
            for _ in 0..30 {
                let a11 = j11 * (1.0 + lambda) + 1e-300;
                let a22 = j22 * (1.0 + lambda) + 1e-300;
                let det = a11 * a22 - j12 * j12;
                if det.abs() < 1e-300 {
                    lambda *= 10.0;
                    continue;
                }
                let da = -(a22 * g1 - j12 * g2) / det;
                let db = -(a11 * g2 - j12 * g1) / det;
                let na = (a + da).clamp(0.0, 1.0);
                let nb = (b + db).clamp(0.0, 1.0);
                let mut qa = vec![0.0; n];
                let mut wa = vec![0.0; n];
                let mut qb = vec![0.0; n];
                let mut wb = vec![0.0; n];
                let nd = eval(na, nb, &mut qa, &mut wa, &mut qb, &mut wb);
                if nd < d {
                    a = na;
                    b = nb;
                    d = nd;
                    pa = qa;
                    va = wa;
                    pb = qb;
                    vb = wb;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        Some((a, b, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn equator() -> PiecewiseCurve {
        PiecewiseCurve::single(Segment::great_circle(
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            0.0,
            2.0 * PI,
        ))
        .unwrap()
    }

    fn warped_circle() -> PiecewiseCurve {
        let knots = HermiteSpline::uniform_knots(2000);
        let h = HermiteSpline::from_fn(knots, |u| {
            let th = 2.0 * PI * u + 0.5 * (2.0 * PI * u).sin();
            let dth = 2.0 * PI * (1.0 + 0.5 * (2.0 * PI * u).cos());
            (
                vec![th.cos(), th.sin(), 0.0],
                vec![-th.sin() * dth, th.cos() * dth, 0.0],
            )
        });
        PiecewiseCurve::single(Segment::Hermite(h)).unwrap()
    }

    /// Lemniscate-like curve on S² crossing itself once, at s = 1/4 ~ 3/4.
    pub(crate) fn figure_eight() -> PiecewiseCurve {
        let f = |u: f64| -> (Vec<f64>, Vec<f64>) {
            let w = 2.0 * PI;
            let x = 0.8 * (w * u).cos();
            let y = 0.4 * (2.0 * w * u).sin();
            let dx = -0.8 * w * (w * u).sin();
            let dy = 0.8 * w * (2.0 * w * u).cos();
            let r = (1.0 + x * x + y * y).sqrt();
            let dr = (x * dx + y * dy) / r;
            let p = [x / r, y / r, 1.0 / r];
            let v = [
                (dx * r - x * dr) / (r * r),
                (dy * r - y * dr) / (r * r),
                -dr / (r * r),
            ];
            (p.to_vec(), v.to_vec())
        };
        let h = HermiteSpline::from_fn(HermiteSpline::uniform_knots(2000), f);
        PiecewiseCurve::single(Segment::Hermite(h)).unwrap()
    }

    #[test]
    fn evaluate_equator() {
        let c = equator();
        let (p, v) = c.evaluate(0.0).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        assert_relative_eq!(norm(&v), 2.0 * PI, epsilon = 1e-14);
        let (p1, _) = c.evaluate(1.0).unwrap();
        assert!(dist(&p, &p1) < 1e-15);
        assert!(c.evaluate(1.5).is_err());
        assert!(c.evaluate(-0.1).is_err());
    }

    #[test]
    fn velocity_matches_central_differences() {
        let segs = [
            equator().segments()[0].clone(),
            Segment::Winding(Winding {
                amplitudes: vec![0.5f64.sqrt(); 2],
                windings: vec![1.0, -3.0],
                phases: vec![0.0, 0.3],
            }),
            warped_circle().segments()[0].clone(),
            Segment::Reparameterized(Reparameterized::new(warped_circle().segments()[0].clone()).unwrap()),
            Segment::WithCircle(WithCircle {
                inner: Box::new(equator().segments()[0].clone()),
                phase0: 0.0,
                phase1: 4.0 * PI,
            }),
        ];
        for seg in &segs {
            for k in 1..40 {
                let u = k as f64 / 40.0 + 0.0031;
                let hstep = 1e-6;
                let (pp, _) = seg.eval(u + hstep);
                let (pm, _) = seg.eval(u - hstep);
                let (_, v) = seg.eval(u);
                let fd: Vec<f64> = pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * hstep)).collect();
                let err = dist(&fd, &v) / norm(&v);
                assert!(err < 1e-6, "{seg:?} at {u}: rel err {err}");
            }
        }
    }

    #[test]
    fn junction_and_closure_validated() {
        let a = Segment::great_circle(vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], 0.0, PI);
        let b = Segment::great_circle(vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], PI, 2.0 * PI);
        assert!(PiecewiseCurve::new(vec![a.clone(), b.clone()], vec![0.0, 0.5, 1.0]).is_ok());
        let open = PiecewiseCurve::new(vec![a.clone()], vec![0.0, 1.0]);
        assert!(matches!(open, Err(Error::Construction { .. })));
        assert!(PiecewiseCurve::new_open(vec![a.clone()], vec![0.0, 1.0]).is_ok());
        let broken = PiecewiseCurve::new(vec![b, a], vec![0.0, 0.5, 1.0]);
        assert!(broken.is_ok(), "b ends where a starts");
        assert!(PiecewiseCurve::new(vec![equator().segments()[0].clone()], vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn arc_lengths() {
        assert_relative_eq!(equator().arc_length().unwrap(), 2.0 * PI, epsilon = 1e-10);
        let c = warped_circle();
        assert_relative_eq!(c.arc_length().unwrap(), 2.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn arc_length_additive_over_splits() {
        let c = warped_circle();
        let total = c.arc_length().unwrap();
        for split in [0.1, 0.37, 0.5, 0.81] {
            let a = c.arc_length_between(0.0, split).unwrap();
            let b = c.arc_length_between(split, 1.0).unwrap();
            assert!((a + b - total).abs() < 1e-12, "split {split}: {}", a + b - total);
        }
    }

    #[test]
    fn constant_speed_circle_is_identity() {
        let c = equator();
        let r = c.reparameterize_constant_speed().unwrap();
        for k in 0..=50 {
            let s = k as f64 / 50.0;
            assert!(dist(&c.position(s), &r.position(s)) < 1e-10);
        }
    }

    #[test]
    fn warped_circle_reparameterizes_to_uniform_circle() {
        let c = warped_circle();
        let r = c.reparameterize_constant_speed().unwrap();
        assert!(r.speed_deviation(2000) < 1e-6);
        assert_relative_eq!(r.arc_length().unwrap(), c.arc_length().unwrap(), max_relative = 1e-9);
        // arclength inversion oracle: uniform circle at angle 2πs
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let want = [(2.0 * PI * s).cos(), (2.0 * PI * s).sin(), 0.0];
            assert!(dist(&r.position(s), &want) < 1e-9, "s={s}: {}", dist(&r.position(s), &want));
        }
    }

    #[test]
    fn two_arc_junction_moves_by_length() {
        let a = Segment::great_circle(vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], 0.0, PI / 2.0);
        let b = Segment::great_circle(vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], PI / 2.0, 2.0 * PI);
        let c = PiecewiseCurve::new(vec![a, b], vec![0.0, 0.5, 1.0])
            .unwrap()
            .with_declared_self_intersections(vec![0.5])
            .unwrap();
        let r = c.reparameterize_constant_speed().unwrap();
        assert!((r.breakpoints()[1] - 0.25).abs() < 1e-12);
        assert!((r.declared_self_intersections().unwrap()[0] - 0.25).abs() < 1e-12);
        assert!(r.speed_deviation(1000) < 1e-9);
    }

    #[test]
    fn degenerate_segment_rejected() {
        let point = Segment::Circle(CircleArc {
            center: vec![1.0, 0.0, 0.0],
            cos_vec: vec![0.0; 3],
            sin_vec: vec![0.0; 3],
            theta0: 0.0,
            theta1: 1.0,
        });
        let c = PiecewiseCurve::single(point).unwrap();
        assert!(matches!(c.reparameterize_constant_speed(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn self_intersections() {
        assert!(equator().self_intersection_parameters(1e-9).is_empty());
        let pairs = figure_eight().self_intersection_parameters(1e-9);
        assert_eq!(pairs.len(), 1, "{pairs:?}");
        assert!((pairs[0].0 - 0.25).abs() < 1e-6 && (pairs[0].1 - 0.75).abs() < 1e-6);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let c = warped_circle().reparameterize_constant_speed().unwrap();
        for k in 0..20 {
            let s = k as f64 / 19.0;
            assert_eq!(c.evaluate(s).unwrap(), c.evaluate(s).unwrap());
        }
    }
}
