//! Horizontal lifts of S² curves to S³, their holonomy, and the choice of
//! the cyclic generator that corrects it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{dist, HermiteSpline, PiecewiseCurve, Segment};
use crate::error::{Error, Result};
use crate::hopf::{fiber_angle, horizontal_velocity, hopf_raw, wrap_angle, SpherePoint3, TAU_FIBER};
use crate::quadrature;

/// Endpoint drift between successive step doublings at which the lift
/// integrator stops refining.
pub const LIFT_DRIFT_TOL: f64 = 1e-10;
const MIN_STEPS: usize = 1024;
const MAX_STEPS: usize = 1 << 18;
/// |φ| values closer than this are ties when choosing the generator.
pub const GENERATOR_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LiftResult {
    /// The lift; shares `α`'s breakpoints and is generally not closed.
    pub beta: PiecewiseCurve,
    pub start_point: SpherePoint3,
    pub lift_length: f64,
    /// RK4 steps used on each segment of `α`.
    pub steps: Vec<usize>,
}

impl LiftResult {
    pub fn point(&self, s: f64) -> SpherePoint3 {
        let p = self.beta.position(s);
        let n = (p.iter().map(|x| x * x).sum::<f64>()).sqrt();
        SpherePoint3::raw(Complex64::new(p[0] / n, p[1] / n), Complex64::new(p[2] / n, p[3] / n))
    }

    pub fn end_point(&self) -> SpherePoint3 {
        self.point(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    /// Angle of `ζ` with `β(0) = β(1)·ζ`.
    pub holonomy_angle: f64,
    pub g: u64,
    pub phi_alpha: f64,
}

#[inline]
fn as_c2(x: &[f64]) -> (Complex64, Complex64) {
    (Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))
}

fn field(beta: [f64; 4], dalpha: &[f64]) -> [f64; 4] {
    let (a, b) = as_c2(&beta);
    let (u, w) = horizontal_velocity(a, b, [dalpha[0], dalpha[1], dalpha[2]]);
    [u.re, u.im, w.re, w.im]
}

fn axpy(x: [f64; 4], h: f64, k: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| x[i] + h * k[i])
}

fn normalize4(x: [f64; 4]) -> [f64; 4] {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.map(|v| v / n)
}

/// RK4 over one segment's local parameter with `n` steps.
fn integrate_segment(seg: &Segment, start: [f64; 4], n: usize) -> (Vec<[f64; 4]>, Vec<[f64; 4]>) {
    let h = 1.0 / n as f64;
    let mut pos = [0.0; 3];
    let mut vel = [0.0; 3];
    let mut dalpha = |u: f64| {
        seg.eval_into(u, &mut pos, &mut vel);
        vel
    };
    let mut states = Vec::with_capacity(n + 1);
    let mut tangents = Vec::with_capacity(n + 1);
    let mut y = start;
    states.push(y);
    for k in 0..n {
        let u = k as f64 * h;
        let d0 = dalpha(u);
        let dm = dalpha(u + 0.5 * h);
        let d1 = dalpha(if k + 1 == n { 1.0 } else { u + h });
        let k1 = field(y, &d0);
        if k == 0 {
            tangents.push(k1);
        }
        let k2 = field(axpy(y, 0.5 * h, k1), &dm);
        let k3 = field(axpy(y, 0.5 * h, k2), &dm);
        let k4 = field(axpy(y, h, k3), &d1);
        y = normalize4(std::array::from_fn(|i| {
            y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        }));
        states.push(y);
        tangents.push(field(y, &d1));
    }
    (states, tangents)
}

/// Lifts `alpha` (a curve on S²) to the horizontal curve on S³ through
/// `start`, integrating each smooth segment with step-doubling RK4 and
/// renormalizing to S³ after every step.
pub fn horizontal_lift(alpha: &PiecewiseCurve, start: SpherePoint3) -> Result<LiftResult> {
    if alpha.ambient_dim() != 3 {
        return Err(Error::domain(format!(
            "lift needs a curve in ℝ³, got ambient dimension {}",
            alpha.ambient_dim()
        )));
    }
    let a0 = alpha.position(0.0);
    let w0 = hopf_raw(start.a, start.b);
    let gap = dist(&a0, &w0);
    if gap > TAU_FIBER {
        return Err(Error::domain(format!(
            "start point is not on the fiber over α(0) (gap {gap:.3e})"
        )));
    }
    let mut y = normalize4(start.to_real());
    let mut segments = Vec::with_capacity(alpha.segments().len());
    let mut steps = Vec::new();
    for seg in alpha.segments() {
        let mut n = MIN_STEPS.max(2 * seg.edges().len()).max((64.0 * seg.oscillation()) as usize);
        let mut states = integrate_segment(seg, y, n).0;
        let tangents = loop {
            if n >= MAX_STEPS {
                return Err(Error::Numeric {
                    what: "lift integrator step size underflow".into(),
                    last_change: f64::NAN,
                    evaluations: n,
                });
            }
            let (s2, t2) = integrate_segment(seg, y, 2 * n);
            let drift = dist(states.last().unwrap(), s2.last().unwrap());
            n *= 2;
            states = s2;
            if drift < LIFT_DRIFT_TOL {
                break t2;
            }
        };
        y = *states.last().unwrap();
        let knots = HermiteSpline::uniform_knots(n);
        segments.push(Segment::Hermite(HermiteSpline {
            knots,
            points: states.iter().map(|s| s.to_vec()).collect(),
            tangents: tangents.iter().map(|s| s.to_vec()).collect(),
        }));
        steps.push(n);
    }
    let beta = PiecewiseCurve::new_open(segments, alpha.breakpoints().to_vec())?;
    let lift_length = beta.arc_length()?;
    Ok(LiftResult {
        beta,
        start_point: start,
        lift_length,
        steps,
    })
}

/// `{k ∈ 1..n : gcd(k, n) = 1}`.
pub fn generators(n: u64) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::domain(format!("cyclic group order {n} < 2")));
    }
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    Ok((1..n).filter(|&k| gcd(k, n) == 1).collect())
}

/// Holonomy of the lift and the generator `g ∈ G_{t+1}` minimizing `|φ_α|`
/// where `e^{iφ_α} = e^{i·holonomy}·e^{2πig/(t+1)}`. Ties go to the smallest `g`.
pub fn holonomy(lift: &LiftResult, t: u64) -> Result<HolonomyResult> {
    if t < 1 {
        return Err(Error::domain("holonomy needs t ≥ 1"));
    }
    let angle = fiber_angle(lift.end_point(), lift.point(0.0))?;
    Ok(choose_generator(angle, t))
}

/// Generator choice for a given holonomy angle.
pub fn choose_generator(holonomy_angle: f64, t: u64) -> HolonomyResult {
    let n = t + 1;
    let mut best: Option<(u64, f64)> = None;
    for g in generators(n).expect("t ≥ 1") {
        let phi = wrap_angle(holonomy_angle + 2.0 * PI * g as f64 / n as f64);
        match best {
            Some((_, b)) if phi.abs() >= b.abs() - GENERATOR_TIE_TOL => {}
            _ => best = Some((g, phi)),
        }
    }
    let (g, phi_alpha) = best.unwrap();
    HolonomyResult {
        holonomy_angle,
        g,
        phi_alpha,
    }
}

/// Upper bound on `|φ_α|` from the generator set: `π/(t+1)` times the largest
/// cyclic gap between consecutive generators. For prime `t+1` this is
/// `2π/(t+1)`.
pub fn generator_bound(t: u64) -> Result<f64> {
    if t <= 2 {
        return Err(Error::domain(format!("generator bound is stated for t > 2, got {t}")));
    }
    cyclic_gap_bound(t)
}

/// The expression of [`generator_bound`] without its `t > 2` restriction.
pub fn cyclic_gap_bound(t: u64) -> Result<f64> {
    let n = t + 1;
    let g = generators(n)?;
    let mut gap = g[0] + n - g[g.len() - 1];
    for w in g.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    Ok(PI * gap as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaCheck {
    /// Area of the region whose boundary orientation matches the lift's
    /// holonomy sign convention, in [0, 4π).
    pub area: f64,
    pub holonomy_angle: f64,
    /// Distance of the holonomy angle from `−area/2` modulo 2π.
    pub residual: f64,
}

/// Compares the lift's holonomy with the spherical area enclosed by `alpha`.
///
/// The area comes from `∮ (x·dy − y·dx)/(1 + z)` in a frame whose pole is
/// chosen far from the curve's antipodal image; the 1-form is smooth
/// everywhere except at the antipode of the pole.
pub fn enclosed_area_check(alpha: &PiecewiseCurve, lift: &LiftResult) -> Result<AreaCheck> {
    let holonomy_angle = fiber_angle(lift.end_point(), lift.point(0.0))?;
    let length = alpha.arc_length()?;
    if length < 1e-12 {
        return Ok(AreaCheck {
            area: 0.0,
            holonomy_angle,
            residual: holonomy_angle.abs(),
        });
    }
    if !alpha.self_intersection_parameters(1e-7).is_empty() {
        return Err(Error::domain("enclosed area needs a simple curve"));
    }
    let samples = alpha.sample(2048);
    let mut candidates: Vec<[f64; 3]> = Vec::new();
    for i in 0..3 {
        for sgn in [-1.0, 1.0] {
            let mut p = [0.0; 3];
            p[i] = sgn;
            candidates.push(p);
        }
    }
    let r3 = 1.0 / 3f64.sqrt();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                candidates.push([sx * r3, sy * r3, sz * r3]);
            }
        }
    }
    let pole = candidates
        .into_iter()
        .map(|p| {
            let anti = [-p[0], -p[1], -p[2]];
            let clearance = samples.iter().map(|(_, x, _)| dist(x, &anti)).fold(f64::INFINITY, f64::min);
            (p, clearance)
        })
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0;
    let (e1, e2) = orthonormal_complement(pole);
    let dot = |a: &[f64], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let intervals = alpha.smooth_intervals();
    let panels = alpha.panels_for_degree(2);
    let (flux, _) = quadrature::integrate(&intervals, panels, 1e-12, |s| {
        let mut p = [0.0; 3];
        let mut v = [0.0; 3];
        alpha.eval_into(s, &mut p, &mut v);
        let (x, y, z) = (dot(&p, &e1), dot(&p, &e2), dot(&p, &pole));
        let (dx, dy) = (dot(&v, &e1), dot(&v, &e2));
        (x * dy - y * dx) / (1.0 + z)
    })?;
    let area = flux.rem_euclid(4.0 * PI);
    let residual = wrap_angle(holonomy_angle + area / 2.0).abs();
    Ok(AreaCheck {
        area,
        holonomy_angle,
        residual,
    })
}

fn orthonormal_complement(p: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let k = helper[0] * p[0] + helper[1] * p[1] + helper[2] * p[2];
    let mut e1 = [helper[0] - k * p[0], helper[1] - k * p[1], helper[2] - k * p[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|x| *x /= n);
    let e2 = [
        p[1] * e1[2] - p[2] * e1[1],
        p[2] * e1[0] - p[0] * e1[2],
        p[0] * e1[1] - p[1] * e1[0],
    ];
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::equator_curve;
    use crate::curve::{norm, CircleArc};
    use crate::hopf::{fiber_multiply, fiber_section, SpherePoint2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn equator_start() -> SpherePoint3 {
        let h = 1.0 / 2f64.sqrt();
        SpherePoint3::new(c(h, 0.0), c(h, 0.0)).unwrap()
    }

    fn small_circle(rho: f64) -> PiecewiseCurve {
        PiecewiseCurve::single(Segment::Circle(CircleArc {
            center: vec![rho.cos(), 0.0, 0.0],
            cos_vec: vec![0.0, rho.sin(), 0.0],
            sin_vec: vec![0.0, 0.0, rho.sin()],
            theta0: 0.0,
            theta1: 2.0 * PI,
        }))
        .unwrap()
    }

    fn start_over(alpha: &PiecewiseCurve) -> SpherePoint3 {
        let p = alpha.position(0.0);
        fiber_section(SpherePoint2::from_vec3([p[0], p[1], p[2]]).unwrap())
    }

    #[test]
    fn equator_lift_matches_closed_form() {
        let lift = horizontal_lift(&equator_curve(), equator_start()).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let mut worst: f64 = 0.0;
        for k in 0..=1000 {
            let r = k as f64 / 1000.0;
            let want = [
                h * (PI * r).cos(),
                h * (PI * r).sin(),
                h * (PI * r).cos(),
                -h * (PI * r).sin(),
            ];
            worst = worst.max(dist(&lift.beta.position(r), &want));
        }
        assert!(worst < 1e-8, "sup error {worst}");
        assert!((lift.lift_length - PI).abs() < 1e-8);
    }

    #[test]
    fn constant_curve_lifts_to_constant() {
        let point = PiecewiseCurve::single(Segment::Circle(CircleArc {
            center: vec![0.0, 1.0, 0.0],
            cos_vec: vec![0.0; 3],
            sin_vec: vec![0.0; 3],
            theta0: 0.0,
            theta1: 1.0,
        }))
        .unwrap();
        let lift = horizontal_lift(&point, equator_start()).unwrap();
        for k in 0..=10 {
            assert!(dist(&lift.beta.position(k as f64 / 10.0), &equator_start().to_real()) < 1e-15);
        }
    }

    #[test]
    fn lift_halves_speed_and_stays_horizontal() {
        for alpha in [equator_curve(), small_circle(0.7)] {
            let lift = horizontal_lift(&alpha, start_over(&alpha)).unwrap();
            for k in 0..500 {
                let s = (k as f64 + 0.37) / 500.0;
                let (_, va) = alpha.evaluate(s).unwrap();
                let (pb, vb) = lift.beta.evaluate(s).unwrap();
                assert!((norm(&vb) - norm(&va) / 2.0).abs() < 1e-7 * norm(&va));
                let (a, b) = as_c2(&pb);
                let (u, w) = as_c2(&vb);
                let defect = (u * a.conj() + w * b.conj()).im;
                assert!(defect.abs() < 1e-8);
                let img = hopf_raw(a, b);
                assert!(dist(&img, &alpha.position(s)) < 1e-8);
            }
            let len = alpha.arc_length().unwrap();
            assert!((lift.lift_length - len / 2.0).abs() < 1e-7 * len);
        }
    }

    #[test]
    fn lift_is_equivariant() {
        let alpha = small_circle(1.1);
        let start = start_over(&alpha);
        let zeta = Complex64::from_polar(1.0, 0.9);
        let base = horizontal_lift(&alpha, start).unwrap();
        let turned = horizontal_lift(&alpha, fiber_multiply(start, zeta).unwrap()).unwrap();
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let p = base.point(s);
            let q = turned.point(s);
            assert!((q.a - p.a * zeta).norm() < 1e-8 && (q.b - p.b * zeta).norm() < 1e-8);
        }
    }

    #[test]
    fn start_off_fiber_rejected() {
        let start = SpherePoint3::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(horizontal_lift(&equator_curve(), start), Err(Error::Domain(_))));
    }

    #[test]
    fn equator_holonomy_values() {
        let lift = horizontal_lift(&equator_curve(), equator_start()).unwrap();
        let h3 = holonomy(&lift, 3).unwrap();
        assert!(wrap_angle(h3.holonomy_angle - PI).abs() < 1e-9);
        assert!((h3.phi_alpha.abs() - PI / 2.0).abs() < 1e-9);
        assert_eq!(h3.g, 1);
        let h2 = holonomy(&lift, 2).unwrap();
        assert!((h2.phi_alpha.abs() - PI / 3.0).abs() < 1e-9);
        let h1 = holonomy(&lift, 1).unwrap();
        assert!(h1.phi_alpha.abs() < 1e-9);
        assert!(holonomy(&lift, 0).is_err());
    }

    #[test]
    fn generator_sets() {
        assert_eq!(generators(4).unwrap(), vec![1, 3]);
        assert_eq!(generators(5).unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(generators(6).unwrap(), vec![1, 5]);
        assert!(generators(1).is_err());
    }

    #[test]
    fn generator_bounds() {
        // direct evaluation over {1, 3}: the two points are π apart
        assert!((generator_bound(3).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((generator_bound(4).unwrap() - 2.0 * PI / 5.0).abs() < 1e-15);
        assert!((generator_bound(6).unwrap() - 2.0 * PI / 7.0).abs() < 1e-15);
        assert!(generator_bound(2).is_err());
    }

    #[test]
    fn phi_respects_generator_bound_for_all_holonomies() {
        for t in 3..30u64 {
            let bound = generator_bound(t).unwrap();
            for k in 0..400 {
                let h = -PI + 2.0 * PI * (k as f64 + 0.5) / 400.0;
                let r = choose_generator(h, t);
                assert!(r.phi_alpha.abs() <= bound + 1e-12, "t={t} h={h}");
                let lhs = Complex64::from_polar(1.0, r.phi_alpha);
                let rhs = Complex64::from_polar(1.0, h + 2.0 * PI * r.g as f64 / (t + 1) as f64);
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn area_matches_holonomy() {
        let eq = equator_curve();
        let lift = horizontal_lift(&eq, equator_start()).unwrap();
        let chk = enclosed_area_check(&eq, &lift).unwrap();
        assert!((chk.area - 2.0 * PI).abs() < 1e-9);
        assert!(chk.residual < 1e-8);
        for rho in [0.3, 0.9, 1.4, 2.5] {
            let alpha = small_circle(rho);
            let lift = horizontal_lift(&alpha, start_over(&alpha)).unwrap();
            let chk = enclosed_area_check(&alpha, &lift).unwrap();
            let cap = 2.0 * PI * (1.0 - rho.cos());
            let either = (chk.area - cap).abs().min((chk.area - (4.0 * PI - cap)).abs());
            assert!(either < 1e-8, "rho={rho}: area {} vs cap {cap}", chk.area);
            assert!(chk.residual < 1e-6, "rho={rho}: residual {}", chk.residual);
        }
    }

    #[test]
    fn area_of_point_curve_is_zero() {
        let point = PiecewiseCurve::single(Segment::Circle(CircleArc {
            center: vec![0.0, 1.0, 0.0],
            cos_vec: vec![0.0; 3],
            sin_vec: vec![0.0; 3],
            theta0: 0.0,
            theta1: 1.0,
        }))
        .unwrap();
        let lift = horizontal_lift(&point, equator_start()).unwrap();
        let chk = enclosed_area_check(&point, &lift).unwrap();
        assert_eq!(chk.area, 0.0);
        assert_eq!(chk.residual, 0.0);
    }
}
