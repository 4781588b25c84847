//! Sparse real polynomials over at most four real coordinates.
//!
//! The moment engine, Husimi densities and the quadrature fast path all share
//! this representation. Exponent vectors are fixed-width; coordinates beyond
//! `dim` always carry exponent zero.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

pub const MAX_DIM: usize = 4;

/// Exponent vector of a monomial `x_0^a x_1^b ...`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonomialIndex(pub [u16; MAX_DIM]);

impl MonomialIndex {
    pub fn new(powers: &[u16]) -> Self {
        assert!(powers.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut p = [0u16; MAX_DIM];
        p[..powers.len()].copy_from_slice(powers);
        MonomialIndex(p)
    }

    pub fn unit(i: usize) -> Self {
        let mut p = [0u16; MAX_DIM];
        p[i] = 1;
        MonomialIndex(p)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&p| p as u32).sum()
    }

    pub fn powers(&self) -> &[u16; MAX_DIM] {
        &self.0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = self.0;
        for (a, b) in p.iter_mut().zip(other.0.iter()) {
            *a += *b;
        }
        MonomialIndex(p)
    }
}

/// Sparse polynomial with real coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPoly {
    dim: usize,
    terms: BTreeMap<MonomialIndex, f64>,
}

impl RealPoly {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        RealPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MonomialIndex::default(), c);
        p
    }

    pub fn monomial(dim: usize, idx: MonomialIndex, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(idx, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        Self::monomial(dim, MonomialIndex::unit(i), 1.0)
    }

    /// `x^T Q x` as a polynomial.
    pub fn quadratic_form(q: &DMatrix<f64>) -> Self {
        let dim = q.nrows();
        let mut p = Self::zero(dim);
        for i in 0..dim {
            for j in 0..dim {
                let idx = MonomialIndex::unit(i).mul(&MonomialIndex::unit(j));
                p.add_term(idx, q[(i, j)]);
            }
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    pub fn coeff(&self, idx: &MonomialIndex) -> f64 {
        self.terms.get(idx).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MonomialIndex, &f64)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, idx: MonomialIndex, c: f64) {
        debug_assert!(idx.0[self.dim..].iter().all(|&p| p == 0));
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(idx).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&idx);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (k, &c) in other.iter() {
            out.add_term(*k, c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, &c) in self.iter() {
            out.add_term(*k, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::zero(self.dim);
        for (ka, &ca) in self.iter() {
            for (kb, &cb) in other.iter() {
                out.add_term(ka.mul(kb), ca * cb);
            }
        }
        out
    }

    /// Drops coefficients below `rel * max|c|`.
    pub fn cleaned(&self, rel: f64) -> Self {
        let max = self.terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut out = Self::zero(self.dim);
        for (k, &c) in self.iter() {
            if c.abs() >= rel * max {
                out.add_term(*k, c);
            }
        }
        out
    }

    /// Largest exponent of each coordinate over all terms.
    pub fn max_powers(&self) -> [u16; MAX_DIM] {
        let mut m = [0u16; MAX_DIM];
        for k in self.terms.keys() {
            for (a, b) in m.iter_mut().zip(k.0.iter()) {
                *a = (*a).max(*b);
            }
        }
        m
    }

    /// Smallest total degree in the given coordinates over all terms, i.e. the
    /// order to which the polynomial vanishes on `{x_i = 0, i in coords}`.
    pub fn vanishing_order(&self, coords: &[usize]) -> u32 {
        self.terms
            .keys()
            .map(|k| coords.iter().map(|&i| k.0[i] as u32).sum::<u32>())
            .min()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.evaluator().eval(x)
    }

    /// Flattened form for repeated evaluation inside quadrature loops.
    pub fn evaluator(&self) -> PolyEvaluator {
        let max_pow = self.max_powers();
        let stride = max_pow.iter().map(|&p| p as usize + 1).max().unwrap_or(1);
        PolyEvaluator {
            dim: self.dim,
            stride,
            max_pow,
            terms: self.terms.iter().map(|(k, &c)| (c, k.0)).collect(),
        }
    }
}

impl fmt::Display for RealPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &p) in k.0.iter().enumerate().take(self.dim) {
                if p > 0 {
                    write!(f, "*x{i}^{p}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PolyEvaluator {
    dim: usize,
    stride: usize,
    max_pow: [u16; MAX_DIM],
    terms: Vec<(f64, [u16; MAX_DIM])>,
}

impl PolyEvaluator {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.eval_with(x, &mut buf)
    }

    /// Evaluates using `buf` as scratch space for the power tables.
    pub fn eval_with(&self, x: &[f64], buf: &mut Vec<f64>) -> f64 {
        debug_assert!(x.len() >= self.dim);
        buf.resize(self.stride * self.dim, 0.0);
        for i in 0..self.dim {
            let row = &mut buf[i * self.stride..(i + 1) * self.stride];
            row[0] = 1.0;
            for p in 1..=self.max_pow[i] as usize {
                row[p] = row[p - 1] * x[i];
            }
        }
        let mut acc = 0.0;
        for (c, pw) in &self.terms {
            let mut t = *c;
            for i in 0..self.dim {
                t *= buf[i * self.stride + pw[i] as usize];
            }
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_eval() {
        let x = RealPoly::var(2, 0);
        let y = RealPoly::var(2, 1);
        let p = x.add(&y).mul(&x.add(&y.scale(-1.0)));
        // x^2 - y^2
        assert_eq!(p.len(), 2);
        assert_eq!(p.eval(&[3.0, 2.0]), 5.0);
    }

    #[test]
    fn cancellation_removes_terms() {
        let x = RealPoly::var(1, 0);
        assert!(x.add(&x.scale(-1.0)).is_zero());
    }

    #[test]
    fn vanishing_order_counts_min_degree() {
        let mut p = RealPoly::zero(4);
        p.add_term(MonomialIndex::new(&[2, 0, 0, 0]), 1.0);
        p.add_term(MonomialIndex::new(&[0, 1, 1, 0]), 1.0);
        assert_eq!(p.vanishing_order(&[0, 2]), 1);
        assert_eq!(p.vanishing_order(&[1, 3]), 0);
    }
}
