//! Stitching `t+1` rotated copies of a horizontal lift into a closed curve
//! on S³.
//!
//! With `β` the lift of a constant-speed closed curve `α` and `g`, `φ_α` from
//! [`holonomy`], the curve is
//! `γ(s) = β(r(s))·e^{i(θ(r(s)) + 2πg·q(s))}`, where
//! `q(s) = ⌊(t+1)s⌋/(t+1)` and `r(s) = (t+1)(s − q(s))`. The phase `θ` is
//! piecewise linear with slopes `±φ_ε`, bending at points `r_j` placed in each
//! interval between consecutive self-intersection parameters of `α`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{dist, HermiteSpline, PiecewiseCurve, Segment};
use crate::error::{Error, Result};
use crate::hopf::{fiber_section, SpherePoint2};
use crate::lift::{holonomy, horizontal_lift, LiftResult};

/// Relative speed variation below which `α` is used as given.
const CONSTANT_SPEED_TOL: f64 = 1e-10;
/// Proximity at which `α`'s own self-intersections are detected.
pub const ALPHA_INTERSECTION_TOL: f64 = 1e-7;
/// Proximity at which the stitched curve counts as self-intersecting.
pub const GAMMA_INTERSECTION_TOL: f64 = 1e-9;
/// Random δ draws after the deterministic `Δ/2` attempt.
pub const DELTA_DRAWS: usize = 32;
const KNOTS_PER_UNIT: f64 = 4096.0;
const MIN_KNOTS: usize = 16;
const MIN_PIECE: f64 = 1e-12;
const THETA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchPlan {
    pub t: u64,
    pub epsilon: f64,
    pub holonomy_angle: f64,
    pub phi_alpha: f64,
    pub phi_eps: f64,
    pub g: u64,
    pub lift_length: f64,
    /// `0 = s_0 < s_1 < … < s_m = 1`.
    pub s_partition: Vec<f64>,
    pub delta: f64,
    #[serde(rename = "Delta")]
    pub big_delta: f64,
    /// `r_{j,δ}` for `j = 1..=m`.
    pub r_points: Vec<f64>,
}

impl StitchPlan {
    pub fn m(&self) -> usize {
        self.s_partition.len() - 1
    }

    fn ratio(&self) -> f64 {
        if self.phi_eps == 0.0 { 0.0 } else { self.phi_alpha / self.phi_eps }
    }

    /// `r_{j,δ}` for the given `δ`.
    pub fn r_points_for(&self, delta: f64) -> Vec<f64> {
        let s = &self.s_partition;
        let m = self.m();
        let rho = self.ratio();
        (1..=m)
            .map(|j| {
                let base = 0.5 * (s[j - 1] + s[j] + (s[j] - s[j - 1]) * rho);
                let r = if j < m { base + delta } else { base - (m - 1) as f64 * delta };
                r.clamp(s[j - 1], s[j])
            })
            .collect()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            r_points: self.r_points_for(delta),
            ..self.clone()
        }
    }

    /// Speed of the stitched curve, `(t+1)√(L² + φ_ε²)`.
    pub fn speed(&self) -> f64 {
        (self.t + 1) as f64 * self.lift_length.hypot(self.phi_eps)
    }

    /// `(t+1)√(L² + φ_α²) + ε`.
    pub fn claimed_length(&self) -> f64 {
        (self.t + 1) as f64 * self.lift_length.hypot(self.phi_alpha) + self.epsilon
    }
}

/// Continuous piecewise-linear `θ` on [0, 1] with `θ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFunction {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl ThetaFunction {
    fn piece(&self, r: f64) -> usize {
        let n = self.slopes.len();
        self.breakpoints[1..n].partition_point(|&b| b <= r)
    }

    pub fn value(&self, r: f64) -> f64 {
        let i = self.piece(r);
        self.values[i] + self.slopes[i] * (r - self.breakpoints[i])
    }

    pub fn slope(&self, r: f64) -> f64 {
        self.slopes[self.piece(r)]
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// `α` at constant speed, its lift, and the plan derived from them.
#[derive(Debug, Clone)]
pub struct PlanContext {
    pub alpha: PiecewiseCurve,
    pub lift: LiftResult,
    pub plan: StitchPlan,
}

#[derive(Debug, Clone)]
pub struct StitchedCurve {
    pub gamma: PiecewiseCurve,
    pub plan: StitchPlan,
    pub theta: ThetaFunction,
    pub claimed_length: f64,
    /// δ values tried, in order; the last one was accepted.
    pub delta_attempts: Vec<f64>,
    pub seed: u64,
}

/// Self-intersection parameters of `α`, as the partition `0 < s_1 < … < 1`.
fn partition(alpha: &PiecewiseCurve) -> Vec<f64> {
    let mut params: Vec<f64> = match alpha.declared_self_intersections() {
        Some(d) => d.to_vec(),
        None => alpha
            .self_intersection_parameters(ALPHA_INTERSECTION_TOL)
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect(),
    };
    params.retain(|&s| s > 1e-9 && s < 1.0 - 1e-9);
    params.sort_by(f64::total_cmp);
    params.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut out = vec![0.0];
    out.extend(params);
    out.push(1.0);
    out
}

/// Lifts `α` from the section point over `α(0)`, picks `g` and `φ_α`, and
/// lays out `φ_ε`, the partition, `Δ`, and `r_{j,0}`.
pub fn build_plan(alpha: &PiecewiseCurve, t: u64, epsilon: f64) -> Result<PlanContext> {
    if t == 0 {
        return Err(Error::domain("stitching needs t ≥ 1"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be finite and ≥ 0, got {epsilon}")));
    }
    if alpha.ambient_dim() != 3 || !alpha.is_closed() {
        return Err(Error::domain("stitching needs a closed curve on S²"));
    }
    let alpha = if alpha.speed_deviation(2048) > CONSTANT_SPEED_TOL {
        alpha.reparameterize_constant_speed()?
    } else {
        alpha.clone()
    };
    let p0 = alpha.position(0.0);
    let start = fiber_section(SpherePoint2::from_vec3([p0[0], p0[1], p0[2]])?);
    let lift = horizontal_lift(&alpha, start)?;
    let hol = holonomy(&lift, t)?;
    let n = (t + 1) as f64;
    let l = lift.lift_length;
    let phi_a = hol.phi_alpha;
    let phi_eps = (phi_a * phi_a + 2.0 * epsilon * l.hypot(phi_a) / n + epsilon * epsilon / (n * n)).sqrt();
    let s_partition = partition(&alpha);
    let mut plan = StitchPlan {
        t,
        epsilon,
        holonomy_angle: hol.holonomy_angle,
        phi_alpha: phi_a,
        phi_eps,
        g: hol.g,
        lift_length: l,
        s_partition,
        delta: 0.0,
        big_delta: 0.0,
        r_points: Vec::new(),
    };
    let r0 = plan.r_points_for(0.0);
    let m = plan.m();
    let s = &plan.s_partition;
    let mut big_delta = (r0[m - 1] - s[m - 1]) / (m.max(2) - 1) as f64;
    for j in 1..m {
        big_delta = big_delta.min(s[j] - r0[j - 1]);
    }
    plan.big_delta = big_delta.max(0.0);
    plan.r_points = r0;
    Ok(PlanContext { alpha, lift, plan })
}

/// `θ_δ` with slope `+φ_ε` on `(s_{j−1}, r_j)` and `−φ_ε` on `(r_j, s_j)`.
pub fn build_theta(plan: &StitchPlan) -> Result<ThetaFunction> {
    if plan.phi_eps == 0.0 && plan.phi_alpha != 0.0 {
        return Err(Error::Inconsistent("φ_ε = 0 but φ_α ≠ 0".into()));
    }
    let s = &plan.s_partition;
    let mut breakpoints = vec![0.0];
    let mut slopes = Vec::new();
    for (j, &r) in plan.r_points.iter().enumerate() {
        for (end, slope) in [(r, plan.phi_eps), (s[j + 1], -plan.phi_eps)] {
            let last = *breakpoints.last().unwrap();
            if end - last > 0.0 {
                breakpoints.push(end);
                slopes.push(slope);
            }
        }
    }
    *breakpoints.last_mut().unwrap() = 1.0;
    let mut values = vec![0.0];
    for (i, w) in breakpoints.windows(2).enumerate() {
        values.push(values[i] + slopes[i] * (w[1] - w[0]));
    }
    let theta = ThetaFunction { breakpoints, values, slopes };
    let end = theta.end_value();
    if (end - plan.phi_alpha).abs() > THETA_TOL {
        return Err(Error::Inconsistent(format!(
            "θ(1) = {end} differs from φ_α = {}",
            plan.phi_alpha
        )));
    }
    Ok(theta)
}

/// Builds `γ` as Hermite pieces between consecutive breakpoints of `β`, `θ`,
/// and the copy boundaries `k/(t+1)`.
pub fn assemble(plan: &StitchPlan, theta: &ThetaFunction, lift: &LiftResult) -> Result<StitchedCurve> {
    let beta = &lift.beta;
    let copies = plan.t + 1;
    let n = copies as f64;
    let mut cuts: Vec<f64> = beta.breakpoints().iter().chain(&theta.breakpoints).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < MIN_PIECE);
    let bbp = beta.breakpoints();
    let mut segments = Vec::new();
    let mut breakpoints = Vec::new();
    for k in 0..copies {
        let turn = 2.0 * PI * (plan.g * k) as f64 / n;
        for w in cuts.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            let width = r1 - r0;
            let mid = 0.5 * (r0 + r1);
            let bi = bbp[1..bbp.len() - 1].partition_point(|&b| b <= mid);
            let seg = &beta.segments()[bi];
            let (b0, b1) = (bbp[bi], bbp[bi + 1]);
            let ti = theta.piece(mid);
            let (th0, slope) = (theta.value(r0), theta.slopes[ti]);
            let cells = ((KNOTS_PER_UNIT * width).ceil() as usize).max(MIN_KNOTS);
            let mut pos = [0.0; 4];
            let mut vel = [0.0; 4];
            let spline = HermiteSpline::from_fn(HermiteSpline::uniform_knots(cells), |u| {
                let r = r0 + width * u;
                seg.eval_into(((r - b0) / (b1 - b0)).clamp(0.0, 1.0), &mut pos, &mut vel);
                let scale = 1.0 / (b1 - b0);
                let a = Complex64::new(pos[0], pos[1]);
                let b = Complex64::new(pos[2], pos[3]);
                let da = Complex64::new(vel[0], vel[1]) * scale;
                let db = Complex64::new(vel[2], vel[3]) * scale;
                let z = Complex64::from_polar(1.0, th0 + slope * (r - r0) + turn);
                let iz = Complex64::i() * slope;
                let (pa, pb) = (a * z, b * z);
                let (va, vb) = ((da + iz * a) * z * width, (db + iz * b) * z * width);
                (vec![pa.re, pa.im, pb.re, pb.im], vec![va.re, va.im, vb.re, vb.im])
            });
            breakpoints.push((k as f64 + r0) / n);
            segments.push(Segment::Hermite(spline));
        }
    }
    breakpoints.push(1.0);
    let gamma = PiecewiseCurve::new(segments, breakpoints).map_err(|e| match e {
        Error::Construction { gap, .. } => Error::Construction {
            what: "stitched curve does not close".into(),
            gap,
        },
        other => other,
    })?;
    Ok(StitchedCurve {
        gamma,
        plan: plan.clone(),
        theta: theta.clone(),
        claimed_length: plan.claimed_length(),
        delta_attempts: vec![plan.delta],
        seed: 0,
    })
}

/// The finite set `s_{j,k} = (s_j + k)/(t+1)` reduced to [0, 1).
pub fn candidate_parameters(plan: &StitchPlan) -> Vec<f64> {
    let n = (plan.t + 1) as f64;
    let mut out = Vec::new();
    for k in 0..=plan.t {
        for &s in &plan.s_partition {
            out.push(((s + k as f64) / n).rem_euclid(1.0));
        }
    }
    out
}

/// Pairs of distinct candidate parameters whose images are closer than `tol`.
pub fn candidate_collisions(gamma: &PiecewiseCurve, plan: &StitchPlan, tol: f64) -> Vec<(f64, f64)> {
    let mut params = candidate_parameters(plan);
    params.sort_by(f64::total_cmp);
    params.dedup_by(|a, b| (*a - *b).abs() < MIN_PIECE);
    let pts: Vec<Vec<f64>> = params.iter().map(|&s| gamma.position(s)).collect();
    let mut out = Vec::new();
    for i in 0..params.len() {
        for j in i + 1..params.len() {
            if dist(&pts[i], &pts[j]) < tol {
                out.push((params[i], params[j]));
            }
        }
    }
    out
}

/// Tries `δ = Δ/2`, then up to [`DELTA_DRAWS`] seeded draws from `(0, Δ]`,
/// returning the first stitched curve without self-intersections. With
/// `ε = 0` the curve is assembled at `δ = 0` and returned as is.
pub fn select_delta(ctx: &PlanContext, seed: u64) -> Result<StitchedCurve> {
    let plan = &ctx.plan;
    if plan.epsilon == 0.0 {
        let p = plan.with_delta(0.0);
        let mut out = assemble(&p, &build_theta(&p)?, &ctx.lift)?;
        out.seed = seed;
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big = plan.big_delta;
    let mut tried = Vec::new();
    let mut pairs = Vec::new();
    for attempt in 0..=DELTA_DRAWS {
        let delta = if big <= 0.0 {
            0.0
        } else if attempt == 0 {
            0.5 * big
        } else {
            big * (1.0 - rng.random_range(0.0..1.0))
        };
        tried.push(delta);
        let p = plan.with_delta(delta);
        let curve = assemble(&p, &build_theta(&p)?, &ctx.lift)?;
        let mut bad = candidate_collisions(&curve.gamma, &p, GAMMA_INTERSECTION_TOL);
        if bad.is_empty() {
            bad = curve.gamma.self_intersection_parameters(GAMMA_INTERSECTION_TOL);
        }
        if bad.is_empty() {
            return Ok(StitchedCurve {
                delta_attempts: tried,
                seed,
                ..curve
            });
        }
        log::debug!("δ = {delta} rejected: {} collisions", bad.len());
        pairs.extend(bad);
        if big <= 0.0 {
            break;
        }
    }
    Err(Error::SelectionExhausted {
        tried: tried.len(),
        pairs,
    })
}

/// Plan, phase, δ selection and assembly in one call.
pub fn stitch(alpha: &PiecewiseCurve, t: u64, epsilon: f64, seed: u64) -> Result<StitchedCurve> {
    let ctx = build_plan(alpha, t, epsilon)?;
    select_delta(&ctx, seed)
}
