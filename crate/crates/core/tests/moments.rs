//! Closed-form sphere moments against Monte Carlo sampling.

use designcurve::verify::sphere_monomial_average;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const SAMPLES: usize = 10_000_000;
const CHUNKS: usize = 100;

fn random_indices(n: usize, count: usize, rng: &mut impl Rng) -> Vec<Vec<u32>> {
    (0..count)
        .map(|_| {
            let total = rng.random_range(0..=8u32);
            let mut a = vec![0u32; n];
            for _ in 0..total {
                a[rng.random_range(0..n)] += 1;
            }
            a
        })
        .collect()
}

/// Sums of x^a and (x^a)² over uniform points on the sphere in ℝⁿ.
fn monte_carlo(n: usize, indices: &[Vec<u32>], seed: u64) -> Vec<(f64, f64)> {
    let per = SAMPLES / CHUNKS;
    let partials: Vec<Vec<(f64, f64)>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + c as u64);
            let mut acc = vec![(0.0, 0.0); indices.len()];
            let mut x = vec![0.0; n];
            for _ in 0..per {
                x.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v /= r);
                for (a, s) in indices.iter().zip(acc.iter_mut()) {
                    let m: f64 = a.iter().zip(&x).map(|(&k, v)| v.powi(k as i32)).product();
                    s.0 += m;
                    s.1 += m * m;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![(0.0, 0.0); indices.len()];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            o.0 += v.0;
            o.1 += v.1;
        }
    }
    out
}

#[test]
fn sphere_moments_match_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (n, count) in [(3usize, 25usize), (4, 25)] {
        let indices = random_indices(n, count, &mut rng);
        let sums = monte_carlo(n, &indices, 17 * n as u64);
        for (a, (s, s2)) in indices.iter().zip(sums) {
            let mean = s / SAMPLES as f64;
            let var = (s2 / SAMPLES as f64 - mean * mean).max(0.0);
            let se = (var / SAMPLES as f64).sqrt();
            let exact = sphere_monomial_average(a, n);
            assert!(
                (mean - exact).abs() <= 4.0 * se + 1e-15,
                "n={n} a={a:?}: MC {mean} ± {se}, exact {exact}"
            );
        }
    }
}

#[test]
fn quartic_moment_on_s3() {
    let sums = monte_carlo(4, &[vec![4, 0, 0, 0]], 1);
    let mean = sums[0].0 / SAMPLES as f64;
    assert!((sphere_monomial_average(&[4, 0, 0, 0], 4) - 0.125).abs() < 1e-15);
    assert!((mean - 0.125).abs() < 1e-3);
}
