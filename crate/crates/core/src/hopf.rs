//! Points on S³ ⊂ ℂ² and S² ⊂ ℝ×ℂ, the Hopf map between them, and the
//! circle action along its fibers.
//!
//! Coordinates follow the convention `(a, b) ↦ (|a|² − |b|², 2a·b̄)`. A point
//! of S³ is identified with `(Re a, Im a, Re b, Im b)` in ℝ⁴ and a point of S²
//! with `(ξ, Re η, Im η)` in ℝ³.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership tolerance for unit-norm checks.
pub const TAU_UNIT: f64 = 1e-9;
/// Constructors renormalize inputs this close to unit norm and reject the rest.
pub const TAU_RENORMALIZE: f64 = 1e-6;
/// Distance from the pole ξ = −1 below which `fiber_section` switches charts.
pub const TAU_CHART: f64 = 1e-8;
/// Two points are on the same fiber when their Hopf images are this close.
pub const TAU_FIBER: f64 = 1e-7;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2π for tiny negative inputs
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

fn renormalize(norm: f64, what: &str) -> Result<f64> {
    if !norm.is_finite() || (norm - 1.0).abs() > TAU_RENORMALIZE {
        return Err(Error::domain(format!(
            "{what} has norm {norm}, farther than {TAU_RENORMALIZE:e} from 1"
        )));
    }
    Ok(1.0 / norm)
}

/// A point of S³ written as a pair of complex numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint3 {
    pub a: Complex64,
    pub b: Complex64,
}

impl SpherePoint3 {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let scale = renormalize((a.norm_sqr() + b.norm_sqr()).sqrt(), "S³ point")?;
        Ok(Self {
            a: a * scale,
            b: b * scale,
        })
    }

    pub fn from_real(x: [f64; 4]) -> Result<Self> {
        Self::new(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))
    }

    /// Builds a point without checking or renormalizing.
    pub(crate) fn raw(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    pub fn to_real(self) -> [f64; 4] {
        [self.a.re, self.a.im, self.b.re, self.b.im]
    }

    pub fn norm_sqr(self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// Hermitian inner product `⟨self, other⟩ = a·ā' + b·b̄'`.
    pub fn hermitian(self, other: Self) -> Complex64 {
        self.a * other.a.conj() + self.b * other.b.conj()
    }
}

/// A point of S² written as `(ξ, η) ∈ ℝ×ℂ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint2 {
    pub xi: f64,
    pub eta: Complex64,
}

impl SpherePoint2 {
    pub fn new(xi: f64, eta: Complex64) -> Result<Self> {
        let scale = renormalize((xi * xi + eta.norm_sqr()).sqrt(), "S² point")?;
        Ok(Self {
            xi: xi * scale,
            eta: eta * scale,
        })
    }

    pub fn from_vec3(x: [f64; 3]) -> Result<Self> {
        Self::new(x[0], Complex64::new(x[1], x[2]))
    }

    pub fn to_vec3(self) -> [f64; 3] {
        [self.xi, self.eta.re, self.eta.im]
    }

    pub fn distance(self, other: Self) -> f64 {
        let d = [
            self.xi - other.xi,
            self.eta.re - other.eta.re,
            self.eta.im - other.eta.im,
        ];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }
}

/// Hopf map on raw coordinates, no membership check.
#[inline]
pub fn hopf_raw(a: Complex64, b: Complex64) -> [f64; 3] {
    let eta = 2.0 * a * b.conj();
    [a.norm_sqr() - b.norm_sqr(), eta.re, eta.im]
}

pub fn hopf_map(p: SpherePoint3) -> Result<SpherePoint2> {
    let n = p.norm_sqr();
    if (n - 1.0).abs() > TAU_UNIT {
        return Err(Error::domain(format!(
            "hopf_map input has squared norm {n}, off S³"
        )));
    }
    let [xi, re, im] = hopf_raw(p.a, p.b);
    Ok(SpherePoint2 {
        xi,
        eta: Complex64::new(re, im),
    })
}

/// Right multiplication by a unit complex number, moving along the fiber.
pub fn fiber_multiply(p: SpherePoint3, zeta: Complex64) -> Result<SpherePoint3> {
    if (zeta.norm() - 1.0).abs() > TAU_UNIT {
        return Err(Error::domain(format!(
            "fiber multiplier has modulus {}, not unit",
            zeta.norm()
        )));
    }
    Ok(SpherePoint3::raw(p.a * zeta, p.b * zeta))
}

/// A distinguished point on the fiber over `w`.
///
/// Away from the pole ξ = −1 this is `(1/√2)(√(1+ξ), η̄/√(1+ξ))`. Within
/// [`TAU_CHART`] of the pole the chart with real `b` is used instead; it is
/// exactly `(0, 1)` at the pole and stays accurate next to it.
pub fn fiber_section(w: SpherePoint2) -> SpherePoint3 {
    let xi = w.xi.clamp(-1.0, 1.0);
    let (a, b) = if xi + 1.0 > TAU_CHART {
        let r = (1.0 + xi).sqrt();
        (
            Complex64::new(r / 2f64.sqrt(), 0.0),
            w.eta.conj() / (r * 2f64.sqrt()),
        )
    } else {
        let b = ((1.0 - xi) / 2.0).sqrt();
        (w.eta / (2.0 * b), Complex64::new(b, 0.0))
    };
    // near the pole rounding in |η|² is amplified by 1/(1+ξ)
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    SpherePoint3::raw(a / n, b / n)
}

/// The angle of `ζ` with `q = base·ζ`, in (−π, π].
pub fn fiber_angle(base: SpherePoint3, q: SpherePoint3) -> Result<f64> {
    let pb = hopf_raw(base.a, base.b);
    let pq = hopf_raw(q.a, q.b);
    let gap = ((pb[0] - pq[0]).powi(2) + (pb[1] - pq[1]).powi(2) + (pb[2] - pq[2]).powi(2)).sqrt();
    if gap > TAU_FIBER {
        return Err(Error::domain(format!(
            "points lie on fibers {gap:.3e} apart"
        )));
    }
    let z = q.hermitian(base);
    Ok(wrap_angle(z.im.atan2(z.re)))
}

/// The horizontal tangent vector at `(a, b)` that the Hopf differential maps
/// to `dw ∈ ℝ³`.
///
/// The horizontal space is spanned by `e₁ = (−b̄, ā)` and `e₂ = i·e₁`; the
/// coefficients solve the 2×2 normal equations of `dπ(c₁e₁ + c₂e₂) = dw`, so
/// any normal component of `dw` is discarded.
pub fn horizontal_velocity(a: Complex64, b: Complex64, dw: [f64; 3]) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let e1 = (-b.conj(), a.conj());
    let e2 = (i * e1.0, i * e1.1);
    let d1 = hopf_differential(a, b, e1);
    let d2 = hopf_differential(a, b, e2);
    let g11 = dot3(d1, d1);
    let g12 = dot3(d1, d2);
    let g22 = dot3(d2, d2);
    let r1 = dot3(d1, dw);
    let r2 = dot3(d2, dw);
    let det = g11 * g22 - g12 * g12;
    if det.abs() < 1e-300 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let c1 = (g22 * r1 - g12 * r2) / det;
    let c2 = (g11 * r2 - g12 * r1) / det;
    (c1 * e1.0 + c2 * e2.0, c1 * e1.1 + c2 * e2.1)
}

/// Differential of the Hopf map at `(a, b)` applied to `(u, w)`.
#[inline]
pub fn hopf_differential(a: Complex64, b: Complex64, v: (Complex64, Complex64)) -> [f64; 3] {
    let (u, w) = v;
    let dxi = 2.0 * (a.conj() * u).re - 2.0 * (b.conj() * w).re;
    let deta = 2.0 * (u * b.conj() + a * w.conj());
    [dxi, deta.re, deta.im]
}

#[inline]
fn dot3(x: [f64; 3], y: [f64; 3]) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}
