//! Monomial bases and dense polynomials in real coordinates.

use std::collections::HashMap;

use rand::Rng;

/// All exponent vectors `a ∈ ℕⁿ` with `|a| ≤ t`, in graded lexicographic
/// order (by total degree, then lexicographically descending).
///
/// Every monomial after the constant is its `parent` times coordinate
/// `coord`, so the whole basis evaluates with one multiply per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    dim: usize,
    degree: usize,
    exponents: Vec<Vec<u32>>,
    parent: Vec<usize>,
    coord: Vec<usize>,
}

impl MonomialBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut exponents = vec![vec![0u32; dim]];
        for d in 1..=degree {
            let mut level = Vec::new();
            compositions(dim, d as u32, &mut vec![0; dim], 0, &mut level);
            exponents.extend(level);
        }
        let index: HashMap<&[u32], usize> = exponents.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
        let mut parent = vec![0];
        let mut coord = vec![0];
        for e in &exponents[1..] {
            let c = e.iter().position(|&x| x > 0).unwrap();
            let mut p = e.clone();
            p[c] -= 1;
            parent.push(index[p.as_slice()]);
            coord.push(c);
        }
        Self {
            dim,
            degree,
            exponents,
            parent,
            coord,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn index_of(&self, exponent: &[u32]) -> Option<usize> {
        self.exponents.iter().position(|e| e == exponent)
    }

    /// Writes every basis monomial at `x` into `out`.
    pub fn eval_all(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        for i in 1..self.exponents.len() {
            out[i] = out[self.parent[i]] * x[self.coord[i]];
        }
    }
}

/// Exponent vectors of total degree `d`, lexicographically descending.
fn compositions(dim: usize, d: u32, cur: &mut Vec<u32>, pos: usize, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == dim {
        cur[pos] = d;
        out.push(cur.clone());
        return;
    }
    for k in (0..=d).rev() {
        cur[pos] = k;
        compositions(dim, d - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

/// `C(n + t, n)`.
pub fn basis_size(dim: usize, degree: usize) -> usize {
    let mut c: u128 = 1;
    for k in 1..=dim as u128 {
        c = c * (degree as u128 + k) / k;
    }
    c as usize
}

/// A polynomial as coefficients over a [`MonomialBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    basis: MonomialBasis,
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(basis: MonomialBasis, coeffs: Vec<f64>) -> Self {
        assert_eq!(basis.len(), coeffs.len(), "one coefficient per basis monomial");
        Self { basis, coeffs }
    }

    /// Builds a polynomial from `(exponent, coefficient)` terms.
    pub fn from_terms(dim: usize, terms: &[(Vec<u32>, f64)]) -> Self {
        let degree = terms.iter().map(|(e, _)| e.iter().sum::<u32>() as usize).max().unwrap_or(0);
        let basis = MonomialBasis::new(dim, degree);
        let mut coeffs = vec![0.0; basis.len()];
        for (e, c) in terms {
            assert_eq!(e.len(), dim, "exponent length must equal the dimension");
            coeffs[basis.index_of(e).unwrap()] += c;
        }
        Self { basis, coeffs }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(MonomialBasis::new(dim, 0), vec![c])
    }

    /// Every monomial of degree ≤ `degree` with a coefficient drawn uniformly
    /// from [−1, 1].
    pub fn random(dim: usize, degree: usize, rng: &mut impl Rng) -> Self {
        let basis = MonomialBasis::new(dim, degree);
        let coeffs = (0..basis.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.basis
            .exponents
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(e, _)| e.iter().sum::<u32>() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut m = vec![0.0; self.basis.len()];
        self.eval_with(x, &mut m)
    }

    /// Evaluates using `scratch` (length ≥ basis size) for monomial values.
    pub fn eval_with(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        self.basis.eval_all(x, scratch);
        self.coeffs.iter().zip(scratch.iter()).map(|(c, m)| c * m).sum()
    }
}
