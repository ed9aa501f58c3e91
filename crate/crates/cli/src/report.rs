//! JSON reports. Field order is the declaration order below.

use designcurve::lemmas::HalvingFit;
use designcurve::lift::AreaCheck;
use designcurve::stitch::StitchPlan;
use designcurve::verify::{DesignCertificate, MonomialResidual, QuadSettings};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    pub alpha: String,
    pub start: [f64; 4],
    pub t: u64,
    pub holonomy_angle: f64,
    pub g: u64,
    pub phi_alpha: f64,
    pub lift_length: f64,
    pub alpha_length: f64,
    /// Absent for `t ≤ 2`, where the bound is not stated.
    pub generator_bound: Option<f64>,
    pub rk4_steps: Vec<usize>,
    pub output: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StitchReport {
    pub alpha: String,
    pub t: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub length: f64,
    pub claimed_length: f64,
    pub speed: f64,
    pub speed_deviation: f64,
    pub closure_gap: f64,
    pub delta_attempts: Vec<f64>,
    pub simplicity_checked: bool,
    pub plan: StitchPlan,
    pub output: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub curve: String,
    pub curve_name: String,
    pub degree: usize,
    pub space: String,
    pub length: f64,
    pub tolerance: f64,
    pub max_residual: f64,
    pub worst_monomial: Vec<u32>,
    pub verdict: &'static str,
    pub seed: Option<u64>,
    pub settings: QuadSettings,
    pub residuals: Vec<MonomialResidual>,
}

impl CertificateReport {
    pub fn new(curve: String, curve_name: String, cert: DesignCertificate) -> Self {
        Self {
            curve,
            curve_name,
            degree: cert.degree,
            space: cert.space,
            length: cert.length,
            tolerance: cert.tolerance,
            max_residual: cert.max_residual,
            worst_monomial: cert.worst_monomial,
            verdict: if cert.pass { "pass" } else { "fail" },
            seed: None,
            settings: cert.quadrature,
            residuals: cert.residuals,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmasReport {
    pub t: usize,
    pub seed: u64,
    pub polygon_design_residual: f64,
    pub average_exchange_residual: f64,
    /// Absent for `t > 12`.
    pub degree_halving: Option<HalvingFit>,
    pub enclosed_area: AreaCheck,
}

pub fn to_json<T: Serialize>(r: &T) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports always serialize");
    s.push('\n');
    s
}
