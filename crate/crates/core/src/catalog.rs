//! Explicit design curves: the equator of S², the two S³ curves
//! `(cos 2πs, sin 2πs, cos 2πts, −sin 2πts)/√2`, the torus curves and the
//! product of a design curve with a circle.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::curve::{PiecewiseCurve, Segment, WithCircle, Winding};
use crate::error::{Error, Result};
use crate::hopf::TAU_UNIT;

/// Largest winding number stored exactly as an `f64`.
const MAX_WINDING: u64 = 1 << 53;

/// A point of `(S¹)^d`, embedded in `ℝ^{2d}` as `(cos θ₁, sin θ₁, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    pub angles: Vec<f64>,
}

impl TorusPoint {
    pub fn to_real(&self) -> Vec<f64> {
        self.angles.iter().flat_map(|a| [a.cos(), a.sin()]).collect()
    }

    /// Reads back angles, requiring every coordinate pair to be a unit vector.
    pub fn from_real(x: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(Error::domain("torus coordinates come in pairs"));
        }
        let mut angles = Vec::with_capacity(x.len() / 2);
        for p in x.chunks(2) {
            let r = p[0].hypot(p[1]);
            if (r - 1.0).abs() > TAU_UNIT {
                return Err(Error::domain(format!("circle factor has norm {r}")));
            }
            angles.push(p[1].atan2(p[0]));
        }
        Ok(Self { angles })
    }
}

/// `s ↦ (0, cos 2πs, sin 2πs)`, a 1-design curve on S².
pub fn equator_curve() -> PiecewiseCurve {
    PiecewiseCurve::single(Segment::great_circle(
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        0.0,
        2.0 * PI,
    ))
    .expect("equator is a valid closed curve")
}

/// `s ↦ (cos 2πs, sin 2πs, cos 2πts, −sin 2πts)/√2`; a `t`-design curve on
/// S³ for `t ∈ {2, 3}`.
pub fn explicit_s3_curve(t: u64) -> Result<PiecewiseCurve> {
    if !(2..=3).contains(&t) {
        return Err(Error::domain(format!("explicit S³ curve is defined for t ∈ {{2,3}}, got {t}")));
    }
    PiecewiseCurve::single(Segment::Winding(Winding {
        amplitudes: vec![FRAC_1_SQRT_2; 2],
        windings: vec![1.0, -(t as f64)],
        phases: vec![0.0; 2],
    }))
}

/// The winding vector `((t+1)^{d−1}, …, t+1, 1)`.
pub fn torus_windings(t: u64, d: u32) -> Result<Vec<u64>> {
    if d == 0 {
        return Err(Error::domain("torus needs at least one circle factor"));
    }
    let base = t.checked_add(1).ok_or_else(|| Error::domain("t + 1 overflows"))?;
    (0..d)
        .rev()
        .map(|j| match base.checked_pow(j) {
            Some(k) if k <= MAX_WINDING => Ok(k),
            _ => Err(Error::domain(format!("winding ({base})^{j} exceeds the exact integer range"))),
        })
        .collect()
}

/// `s ↦ (e^{2πi(t+1)^{d−1}s}, …, e^{2πi(t+1)s}, e^{2πis})` on `(S¹)^d`.
pub fn torus_curve(t: u64, d: u32) -> Result<PiecewiseCurve> {
    let windings = torus_windings(t, d)?;
    PiecewiseCurve::single(Segment::Winding(Winding {
        amplitudes: vec![1.0; d as usize],
        windings: windings.into_iter().map(|k| k as f64).collect(),
        phases: vec![0.0; d as usize],
    }))
}

/// `s ↦ (α((t+1)s − ⌊(t+1)s⌋), e^{2πis})`: `α` traversed `t+1` times while a
/// circle factor winds once.
pub fn product_curve(alpha: &PiecewiseCurve, t: u64) -> Result<PiecewiseCurve> {
    if !alpha.is_closed() {
        return Err(Error::domain("product construction needs a closed curve"));
    }
    let copies = t + 1;
    let n = copies as f64;
    let bp = alpha.breakpoints();
    let mut segments = Vec::new();
    let mut breakpoints = Vec::new();
    for k in 0..copies {
        for (i, seg) in alpha.segments().iter().enumerate() {
            let (u0, u1) = ((k as f64 + bp[i]) / n, (k as f64 + bp[i + 1]) / n);
            breakpoints.push(u0);
            segments.push(Segment::WithCircle(WithCircle {
                inner: Box::new(seg.clone()),
                phase0: 2.0 * PI * u0,
                phase1: 2.0 * PI * u1,
            }));
        }
    }
    breakpoints.push(1.0);
    PiecewiseCurve::new(segments, breakpoints)
}
