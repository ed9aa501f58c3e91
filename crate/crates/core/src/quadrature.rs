//! Adaptive composite Gauss–Legendre quadrature over piecewise intervals.
//!
//! Each natural interval (a smooth piece of a curve) is split into `p` equal
//! panels carrying a fixed Gauss–Legendre rule; `p` doubles until two
//! successive estimates agree to the requested absolute tolerance.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Nodes per panel.
pub const PANEL_NODES: usize = 16;
/// Panel-count doublings before giving up.
pub const MAX_DOUBLINGS: usize = 14;

/// A Gauss–Legendre rule mapped to [0, 1].
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        Self { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }
}

pub fn panel_rule() -> &'static UnitRule {
    static RULE: OnceLock<UnitRule> = OnceLock::new();
    RULE.get_or_init(|| UnitRule::new(PANEL_NODES))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadStats {
    pub panels_per_interval: usize,
    pub evaluations: usize,
    pub last_change: f64,
}

/// Integrates a vector-valued `f` over the union of `intervals`.
///
/// `f(x, out)` must *add* its value at `x` into `out` scaled by nothing; the
/// driver handles weights. Panels are summed in a fixed order, so results are
/// bitwise reproducible regardless of thread scheduling.
pub fn integrate_vec<F>(
    intervals: &[(f64, f64)],
    initial_panels: usize,
    dim: usize,
    tol: f64,
    f: F,
) -> Result<(Vec<f64>, QuadStats)>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let mut panels = initial_panels.max(1);
    let mut prev = composite(intervals, panels, dim, &f);
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        panels *= 2;
        let next = composite(intervals, panels, dim, &f);
        last_change = prev
            .iter()
            .zip(&next)
            .map(|(p, n)| (p - n).abs())
            .fold(0.0, f64::max);
        prev = next;
        if last_change < tol {
            return Ok((
                prev,
                QuadStats {
                    panels_per_interval: panels,
                    evaluations: panels * intervals.len() * PANEL_NODES,
                    last_change,
                },
            ));
        }
    }
    Err(Error::Numeric {
        what: format!("composite quadrature did not reach tolerance {tol:e}"),
        last_change,
        evaluations: panels * intervals.len() * PANEL_NODES,
    })
}

pub fn integrate<F>(intervals: &[(f64, f64)], initial_panels: usize, tol: f64, f: F) -> Result<(f64, QuadStats)>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_vec(intervals, initial_panels, 1, tol, |x, out| out[0] += f(x))
        .map(|(v, s)| (v[0], s))
}

fn composite<F>(intervals: &[(f64, f64)], panels: usize, dim: usize, f: &F) -> Vec<f64>
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let rule = panel_rule();
    let total = intervals.len() * panels;
    let chunk = 64;
    let partials: Vec<Vec<f64>> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; dim];
            let mut scratch = vec![0.0; dim];
            for idx in (c * chunk)..((c + 1) * chunk).min(total) {
                let (a, b) = intervals[idx / panels];
                let k = idx % panels;
                let h = (b - a) / panels as f64;
                let lo = a + h * k as f64;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    scratch.iter_mut().for_each(|s| *s = 0.0);
                    f(lo + h * x, &mut scratch);
                    let wh = w * h;
                    for (a, s) in acc.iter_mut().zip(&scratch) {
                        *a += wh * s;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; dim];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}
