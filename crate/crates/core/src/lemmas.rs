//! Numerical checks of the fiber-averaging identities behind the
//! construction: the operator `(I_π f)(w) = (1/2π) ∫_{π⁻¹(w)} f`, its
//! evaluation by regular polygons on the fiber, exchange of averages between
//! S³ and S², and `I_π(P_t(S³)) = P_{⌊t/2⌋}(S²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hopf::{fiber_section, hopf_map, SpherePoint2, SpherePoint3};
use crate::poly::Polynomial;
use crate::quadrature::UnitRule;
use crate::verify::sphere_monomial_average;

/// Fiber nodes used as the reference value of `I_π f`.
pub const DENSE_FIBER_NODES: usize = 10_000;
/// Condition number above which a degree-halving fit is reported as
/// ill-conditioned.
pub const CONDITION_WARN: f64 = 1e10;

fn check_s3(f: &Polynomial) -> Result<()> {
    if f.dim() != 4 {
        return Err(Error::domain(format!("expected a polynomial on ℝ⁴, got {} variables", f.dim())));
    }
    Ok(())
}

fn polygon_average(f: &Polynomial, omega: SpherePoint3, nodes: usize, scratch: &mut [f64]) -> f64 {
    (0..nodes)
        .map(|j| {
            let z = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
            let (a, b) = (omega.a * z, omega.b * z);
            f.eval_with(&[a.re, a.im, b.re, b.im], scratch)
        })
        .sum::<f64>()
        / nodes as f64
}

/// Uniform average of `f` over `nodes` equally spaced points on the fiber
/// over `w`; exact for polynomials of degree < `nodes`.
pub fn fiber_average(f: &Polynomial, w: SpherePoint2, nodes: usize) -> Result<f64> {
    check_s3(f)?;
    if nodes == 0 {
        return Err(Error::domain("fiber average needs at least one node"));
    }
    let mut scratch = vec![0.0; f.basis().len()];
    Ok(polygon_average(f, fiber_section(w), nodes, &mut scratch))
}

/// `|(1/(t+1)) Σ_j f(ω e^{2πij/(t+1)}) − (I_π f)(π(ω))|` with the right side
/// from a dense fiber average.
pub fn polygon_design_check(omega: SpherePoint3, t: usize, f: &Polynomial) -> Result<f64> {
    check_s3(f)?;
    if f.degree() > t {
        return Err(Error::domain(format!("polynomial degree {} exceeds t = {t}", f.degree())));
    }
    let mut scratch = vec![0.0; f.basis().len()];
    let polygon = polygon_average(f, omega, t + 1, &mut scratch);
    let dense = fiber_average(f, hopf_map(omega)?, DENSE_FIBER_NODES)?;
    Ok((polygon - dense).abs())
}

fn s2_point(xi: f64, phi: f64) -> SpherePoint2 {
    SpherePoint2::new(xi, Complex64::from_polar((1.0 - xi * xi).max(0.0).sqrt(), phi)).expect("grid point lies on S²")
}

/// `|avg_{S²} I_π f − avg_{S³} f|`. The S² side uses Gauss–Legendre in `ξ`
/// times the trapezoid rule in azimuth and a `deg f + 1`-gon on each fiber,
/// all exact at this degree; the S³ side is the closed-form moment sum.
pub fn average_exchange_check(f: &Polynomial) -> Result<f64> {
    check_s3(f)?;
    let deg = f.degree();
    let order = deg + 1;
    let rule = UnitRule::new(order);
    let mut scratch = vec![0.0; f.basis().len()];
    let mut lhs = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let xi = 2.0 * x - 1.0;
        let ring: f64 = (0..order)
            .map(|j| {
                let p = s2_point(xi, 2.0 * PI * j as f64 / order as f64);
                polygon_average(f, fiber_section(p), order, &mut scratch)
            })
            .sum::<f64>()
            / order as f64;
        lhs += w * ring;
    }
    let rhs: f64 = f
        .basis()
        .exponents()
        .iter()
        .zip(f.coeffs())
        .map(|(e, c)| c * sphere_monomial_average(e, 4))
        .sum();
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalvingFit {
    /// Root-mean-square misfit of the least-squares fit.
    pub residual: f64,
    /// Ratio of extreme singular values of the design matrix.
    pub condition: f64,
    pub fit_degree: usize,
    pub basis_size: usize,
    pub nodes: usize,
}

/// Exponents `(e, p, q)` of `ξ^e x^p y^q` with `e ≤ 1` and `e + p + q ≤ k`,
/// `η = x + iy`. Because `ξ² = 1 − x² − y²` on S², these span the
/// restrictions of degree-`k` polynomials and are independent there.
fn reduced_s2_basis(k: usize) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for e in 0..=1u32.min(k as u32) {
        for d in 0..=(k as u32 - e) {
            for p in (0..=d).rev() {
                out.push((e, p, d - p));
            }
        }
    }
    out
}

/// Least-squares fit of `I_π f` on an S² grid by polynomials of degree `k`.
pub fn degree_halving_fit(f: &Polynomial, k: usize) -> Result<HalvingFit> {
    check_s3(f)?;
    let basis = reduced_s2_basis(k);
    let rule = UnitRule::new(2 * k + 4);
    let azimuths = 4 * k + 4;
    let fiber_nodes = f.degree() + 1;
    let mut scratch = vec![0.0; f.basis().len()];
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for x in &rule.nodes {
        let xi = 2.0 * x - 1.0;
        for j in 0..azimuths {
            let p = s2_point(xi, 2.0 * PI * j as f64 / azimuths as f64);
            values.push(polygon_average(f, fiber_section(p), fiber_nodes, &mut scratch));
            let (ex, ey) = (p.eta.re, p.eta.im);
            rows.push(
                basis
                    .iter()
                    .map(|&(e, a, b)| p.xi.powi(e as i32) * ex.powi(a as i32) * ey.powi(b as i32))
                    .collect::<Vec<_>>(),
            );
        }
    }
    let nrows = rows.len();
    let a = DMatrix::from_fn(nrows, basis.len(), |i, j| rows[i][j]);
    let y = DVector::from_vec(values);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if condition > CONDITION_WARN {
        log::warn!("degree-halving fit is ill-conditioned (condition ≈ {condition:.3e})");
    }
    let coef = svd
        .solve(&y, 1e-14 * sv.max())
        .map_err(|e| Error::Numeric {
            what: format!("least-squares solve failed: {e}"),
            last_change: condition,
            evaluations: nrows,
        })?;
    let r = &a * coef - y;
    Ok(HalvingFit {
        residual: (r.norm_squared() / nrows as f64).sqrt(),
        condition,
        fit_degree: k,
        basis_size: basis.len(),
        nodes: nrows,
    })
}

/// Fits `I_π f` for a seeded random degree-`t` polynomial in degree `⌊t/2⌋`.
pub fn degree_halving_check(t: usize, seed: u64) -> Result<HalvingFit> {
    if t > 12 {
        return Err(Error::domain(format!("degree-halving check supports t ≤ 12, got {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Polynomial::random(4, t, &mut rng);
    degree_halving_fit(&f, t / 2)
}
