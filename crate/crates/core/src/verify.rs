//! Design certification by exact monomial averaging.
//!
//! A closed curve `γ` is a `t`-design curve on a space `X` when
//! `(1/ℓ(γ)) ∫_γ f = ∫_X f dμ` for every polynomial of degree ≤ `t`. Both
//! sides are linear in `f`, so it suffices to compare them on the monomials.
//! The space side has closed forms on spheres and products of spheres; the
//! curve side is one vector quadrature over all monomials at once.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::{norm, PiecewiseCurve};
use crate::error::{Error, Result};
use crate::poly::MonomialBasis;
use crate::quadrature;

/// Absolute tolerance on normalized curve averages.
pub const TAU_QUAD: f64 = 1e-11;
/// Largest residual for which a certificate passes.
pub const TAU_CERT: f64 = 1e-8;

/// `(k−1)!!` for even `k` (1 for `k = 0`).
fn odd_double_factorial_below(k: u32) -> f64 {
    (1..k).step_by(2).map(f64::from).product()
}

/// Average of `x^a` over the unit sphere in `ℝⁿ` under the normalized
/// surface measure.
pub fn sphere_monomial_average(a: &[u32], n: usize) -> f64 {
    if a.iter().any(|k| k % 2 == 1) {
        return 0.0;
    }
    let total: u32 = a.iter().sum();
    let num: f64 = a.iter().map(|&k| odd_double_factorial_below(k)).product();
    let den: f64 = (0..total / 2).map(|k| (n as f64) + 2.0 * k as f64).product();
    num / den
}

/// Average of `∏ cos^{p_j}θ_j sin^{q_j}θ_j` over `(S¹)^d`, with `a`
/// listing `(p_1, q_1, p_2, q_2, …)`.
pub fn torus_monomial_average(a: &[u32]) -> f64 {
    a.chunks(2).map(|pq| sphere_monomial_average(pq, 2)).product()
}

/// A product of round unit spheres, each given by its ambient dimension
/// (2 for a circle, 3 for S², 4 for S³), with the product of normalized
/// surface measures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    pub factors: Vec<usize>,
}

impl Space {
    pub fn sphere(ambient: usize) -> Self {
        Self { factors: vec![ambient] }
    }

    pub fn torus(d: usize) -> Self {
        Self { factors: vec![2; d] }
    }

    pub fn product(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&n| n < 2) {
            return Err(Error::domain("space factors need ambient dimension ≥ 2"));
        }
        Ok(Self { factors })
    }

    pub fn ambient_dim(&self) -> usize {
        self.factors.iter().sum()
    }

    pub fn monomial_average(&self, a: &[u32]) -> f64 {
        let mut off = 0;
        self.factors
            .iter()
            .map(|&n| {
                let v = sphere_monomial_average(&a[off..off + n], n);
                off += n;
                v
            })
            .product()
    }

    /// Largest deviation of a point from lying on every factor sphere.
    pub fn membership_defect(&self, x: &[f64]) -> f64 {
        let mut off = 0;
        self.factors
            .iter()
            .map(|&n| {
                let r = norm(&x[off..off + n]);
                off += n;
                (r - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.factors.as_slice() {
            [3] => write!(f, "s2"),
            [4] => write!(f, "s3"),
            fs if fs.iter().all(|&n| n == 2) => write!(f, "torus-{}", fs.len()),
            fs => {
                let dims: Vec<String> = fs.iter().map(usize::to_string).collect();
                write!(f, "product:{}", dims.join(","))
            }
        }
    }
}

impl FromStr for Space {
    type Err = Error;

    /// `s2`, `s3`, `torus-D`, or `product:N1,N2,…` with ambient factor dimensions.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s2" => return Ok(Self::sphere(3)),
            "s3" => return Ok(Self::sphere(4)),
            _ => {}
        }
        if let Some(d) = s.strip_prefix("torus-") {
            let d: usize = d.parse().map_err(|_| Error::domain(format!("bad torus dimension in {s:?}")))?;
            if d == 0 {
                return Err(Error::domain("torus needs at least one factor"));
            }
            return Ok(Self::torus(d));
        }
        if let Some(list) = s.strip_prefix("product:") {
            let factors = list
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::domain(format!("bad factor list in {s:?}")))?;
            return Self::product(factors);
        }
        Err(Error::domain(format!("unknown space {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub tolerance: f64,
    pub initial_panels: usize,
    pub panels_per_interval: usize,
    pub intervals: usize,
    pub evaluations: usize,
    pub last_change: f64,
}

/// Normalized line averages of every monomial of `basis` along `c`, plus
/// the curve length.
pub fn curve_averages(c: &PiecewiseCurve, basis: &MonomialBasis) -> Result<(Vec<f64>, f64, QuadSettings)> {
    if basis.dim() != c.ambient_dim() {
        return Err(Error::domain(format!(
            "basis in {} variables for a curve in ℝ^{}",
            basis.dim(),
            c.ambient_dim()
        )));
    }
    let length = c.arc_length()?;
    if length <= 0.0 {
        return Err(Error::Degenerate("curve has zero length".into()));
    }
    let n = c.ambient_dim();
    let k = basis.len();
    let intervals = c.smooth_intervals();
    let initial = c.panels_for_degree(basis.degree().max(1));
    let tol = TAU_QUAD * length;
    let (sums, stats) = quadrature::integrate_vec(&intervals, initial, k, tol, |s, out| {
        let mut pos = vec![0.0; n];
        let mut vel = vec![0.0; n];
        let mut mono = vec![0.0; k];
        c.eval_into(s, &mut pos, &mut vel);
        let speed = norm(&vel);
        basis.eval_all(&pos, &mut mono);
        for (o, m) in out.iter_mut().zip(&mono) {
            *o += m * speed;
        }
    })?;
    let settings = QuadSettings {
        tolerance: TAU_QUAD,
        initial_panels: initial,
        panels_per_interval: stats.panels_per_interval,
        intervals: intervals.len(),
        evaluations: stats.evaluations,
        last_change: stats.last_change / length,
    };
    Ok((sums.into_iter().map(|v| v / length).collect(), length, settings))
}

/// Normalized line average of one monomial.
pub fn curve_average(c: &PiecewiseCurve, a: &[u32]) -> Result<f64> {
    let degree = a.iter().sum::<u32>() as usize;
    let basis = MonomialBasis::new(a.len(), degree);
    let idx = basis.index_of(a).expect("basis contains every exponent of its degree");
    Ok(curve_averages(c, &basis)?.0[idx])
}

/// `(1/ℓ(c)) ∫_c f` for an arbitrary function of position.
pub fn line_average(c: &PiecewiseCurve, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
    let n = c.ambient_dim();
    let intervals = c.smooth_intervals();
    let initial = c.panels_for_degree(4);
    let (v, _) = quadrature::integrate_vec(&intervals, initial, 2, TAU_QUAD, |s, out| {
        let mut pos = vec![0.0; n];
        let mut vel = vec![0.0; n];
        c.eval_into(s, &mut pos, &mut vel);
        let speed = norm(&vel);
        out[0] += f(&pos) * speed;
        out[1] += speed;
    })?;
    Ok(v[0] / v[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialResidual {
    pub exponent: Vec<u32>,
    pub curve_average: f64,
    pub space_average: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCertificate {
    pub degree: usize,
    pub space: String,
    pub length: f64,
    pub tolerance: f64,
    pub max_residual: f64,
    pub worst_monomial: Vec<u32>,
    pub pass: bool,
    pub quadrature: QuadSettings,
    pub residuals: Vec<MonomialResidual>,
}

/// Compares curve and space averages of every monomial of degree ≤ `t`.
pub fn certify(c: &PiecewiseCurve, t: usize, space: &Space) -> Result<DesignCertificate> {
    certify_with_tolerance(c, t, space, TAU_CERT)
}

pub fn certify_with_tolerance(c: &PiecewiseCurve, t: usize, space: &Space, tolerance: f64) -> Result<DesignCertificate> {
    if c.ambient_dim() != space.ambient_dim() {
        return Err(Error::domain(format!(
            "curve lives in ℝ^{} but {space} needs ℝ^{}",
            c.ambient_dim(),
            space.ambient_dim()
        )));
    }
    if !c.is_closed() {
        return Err(Error::domain("design curves must be closed"));
    }
    let basis = MonomialBasis::new(c.ambient_dim(), t);
    let (averages, length, quadrature) = curve_averages(c, &basis)?;
    let residuals: Vec<MonomialResidual> = basis
        .exponents()
        .iter()
        .zip(averages)
        .map(|(e, curve_average)| {
            let space_average = space.monomial_average(e);
            MonomialResidual {
                exponent: e.clone(),
                curve_average,
                space_average,
                residual: (curve_average - space_average).abs(),
            }
        })
        .collect();
    let worst = residuals
        .iter()
        .max_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("basis is never empty");
    Ok(DesignCertificate {
        degree: t,
        space: space.to_string(),
        length,
        tolerance,
        max_residual: worst.residual,
        worst_monomial: worst.exponent.clone(),
        pass: worst.residual < tolerance,
        quadrature,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{equator_curve, explicit_s3_curve, torus_curve};

    #[test]
    fn sphere_averages_closed_form() {
        assert!((sphere_monomial_average(&[2, 0, 0, 0], 4) - 0.25).abs() < 1e-15);
        assert_eq!(sphere_monomial_average(&[1, 1, 0], 3), 0.0);
        assert!((sphere_monomial_average(&[4, 0, 0, 0], 4) - 0.125).abs() < 1e-15);
        assert_eq!(sphere_monomial_average(&[0, 0, 0], 3), 1.0);
        // Σ x_i² = 1 on every sphere
        for n in 2..7 {
            let mut s = 0.0;
            for i in 0..n {
                let mut a = vec![0; n];
                a[i] = 2;
                s += sphere_monomial_average(&a, n);
            }
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_averages_consistent_with_radial_identity() {
        // (Σ x_i²)·x^a has the same average as x^a
        let a = [2u32, 4, 0];
        let lhs: f64 = (0..3)
            .map(|i| {
                let mut b = a;
                b[i] += 2;
                sphere_monomial_average(&b, 3)
            })
            .sum();
        assert!((lhs - sphere_monomial_average(&a, 3)).abs() < 1e-15);
    }

    #[test]
    fn torus_averages() {
        assert!((torus_monomial_average(&[2, 0, 0, 0]) - 0.5).abs() < 1e-15);
        assert_eq!(torus_monomial_average(&[1, 0, 0, 0]), 0.0);
        assert!((torus_monomial_average(&[2, 0, 0, 2]) - 0.25).abs() < 1e-15);
        assert!((torus_monomial_average(&[4, 0]) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn space_parsing() {
        for s in ["s2", "s3", "torus-3", "product:3,2"] {
            assert_eq!(s.parse::<Space>().unwrap().to_string(), s);
        }
        assert!("torus-0".parse::<Space>().is_err());
        assert!("cube".parse::<Space>().is_err());
        assert!("product:1".parse::<Space>().is_err());
    }

    #[test]
    fn curve_average_examples() {
        let eq = equator_curve();
        assert!((curve_average(&eq, &[0, 0, 0]).unwrap() - 1.0).abs() < 1e-14);
        assert!(curve_average(&eq, &[1, 0, 0]).unwrap().abs() < 1e-14);
        let c = explicit_s3_curve(3).unwrap();
        assert!((curve_average(&c, &[2, 0, 0, 0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn line_average_matches_monomial_path() {
        let c = explicit_s3_curve(2).unwrap();
        let a = line_average(&c, |x| x[0] * x[0] * x[2] * x[2]).unwrap();
        let b = curve_average(&c, &[2, 0, 2, 0]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn certify_examples() {
        let s3 = Space::sphere(4);
        let c = explicit_s3_curve(3).unwrap();
        let ok = certify(&c, 3, &s3).unwrap();
        assert!(ok.pass && ok.max_residual < 1e-9, "{}", ok.max_residual);
        assert_eq!(ok.residuals.len(), 35);
        let bad = certify(&c, 4, &s3).unwrap();
        assert!(!bad.pass && bad.max_residual > 1e-3);
        let eq = certify(&equator_curve(), 1, &Space::sphere(3)).unwrap();
        assert!(eq.max_residual < 1e-10);
        assert!(!certify(&equator_curve(), 2, &Space::sphere(3)).unwrap().pass);
        assert!(certify(&c, 3, &Space::sphere(3)).is_err());
    }

    #[test]
    fn certify_torus_small() {
        let c = torus_curve(3, 2).unwrap();
        let cert = certify(&c, 3, &Space::torus(2)).unwrap();
        assert!(cert.pass && cert.max_residual < 1e-9);
        assert!((cert.length - 2.0 * std::f64::consts::PI * 17f64.sqrt()).abs() < 1e-9);
        // the first non-vanishing mode (1, -4) has degree 5
        assert!(certify(&c, 4, &Space::torus(2)).unwrap().pass);
        assert!(!certify(&c, 5, &Space::torus(2)).unwrap().pass);
    }
}
