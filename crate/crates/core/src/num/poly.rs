//! Dense-exponent multivariate polynomials with complex coefficients.
//!
//! `MPoly<V>` is a polynomial in `V` formal variables, stored as a sorted
//! exponent map.  It backs the Gaussian term algebra (variables X1, X2 and
//! the scalar u = e^{T/2}) and the Fokker-Planck test functions, both of
//! which need exact differentiation and pointwise evaluation of small
//! polynomials; degrees stay below ~20, so a BTreeMap is plenty.

use std::collections::BTreeMap;

use num_complex::Complex64;

type C = Complex64;

/// Polynomial in `V` variables over the complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoly<const V: usize> {
    /// exponent tuple -> coefficient; zero coefficients are pruned.
    terms: BTreeMap<[u8; V], C>,
}

impl<const V: usize> Default for MPoly<V> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const V: usize> MPoly<V> {
    /// The zero polynomial.
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    /// A constant polynomial.
    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term([0; V], c);
        p
    }

    /// Real constant convenience.
    pub fn constant_re(c: f64) -> Self {
        Self::constant(C::new(c, 0.0))
    }

    /// The monomial `var_i`.
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; V];
        e[i] = 1;
        let mut p = Self::zero();
        p.add_term(e, C::new(1.0, 0.0));
        p
    }

    /// Adds `c * x^e` in place, pruning cancellations.
    pub fn add_term(&mut self, e: [u8; V], c: C) {
        if c == C::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(e).or_insert(C::new(0.0, 0.0));
        *entry += c;
        if entry.norm_sqr() == 0.0 {
            self.terms.remove(&e);
        }
    }

    /// Iterates (exponents, coefficient).
    pub fn iter(&self) -> impl Iterator<Item = (&[u8; V], &C)> {
        self.terms.iter()
    }

    /// True if there are no terms.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored monomials.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when empty (clippy pairing for `len`).
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&e, &c) in other.iter() {
            out.add_term(e, c);
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&e, &c) in other.iter() {
            out.add_term(e, -c);
        }
        out
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&ea, &ca) in self.iter() {
            for (&eb, &cb) in other.iter() {
                let mut e = [0u8; V];
                for i in 0..V {
                    e[i] = ea[i]
                        .checked_add(eb[i])
                        .expect("polynomial degree overflow");
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// Scalar multiple.
    pub fn scale(&self, c: C) -> Self {
        let mut out = Self::zero();
        for (&e, &a) in self.iter() {
            out.add_term(e, a * c);
        }
        out
    }

    /// Multiplication by the variable `i`.
    pub fn mul_var(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (&e, &c) in self.iter() {
            let mut e2 = e;
            e2[i] = e2[i].checked_add(1).expect("polynomial degree overflow");
            out.add_term(e2, c);
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero();
        for (&e, &c) in self.iter() {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e;
            e2[i] -= 1;
            out.add_term(e2, c * e[i] as f64);
        }
        out
    }

    /// Evaluates at a complex point.
    pub fn eval(&self, x: &[C; V]) -> C {
        let mut total = C::new(0.0, 0.0);
        for (&e, &c) in self.iter() {
            let mut m = c;
            for i in 0..V {
                for _ in 0..e[i] {
                    m *= x[i];
                }
            }
            total += m;
        }
        total
    }

    /// Evaluates at a real point.
    pub fn eval_re(&self, x: &[f64; V]) -> C {
        let xc: [C; V] = std::array::from_fn(|i| C::new(x[i], 0.0));
        self.eval(&xc)
    }

    /// Maximum exponent of variable `i`.
    pub fn degree(&self, i: usize) -> u8 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude (0 for the zero polynomial).
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn arithmetic_and_derivative() {
        // p = (1 + 2 x0) * x1^2
        let p = MPoly::<2>::constant(c(1.0))
            .add(&MPoly::var(0).scale(c(2.0)))
            .mul(&MPoly::var(1).mul(&MPoly::var(1)));
        assert_eq!(p.eval_re(&[0.5, 3.0]), c(18.0));
        // d/dx1 p = 2 x1 (1 + 2 x0)
        let d = p.derivative(1);
        assert_eq!(d.eval_re(&[0.5, 3.0]), c(12.0));
        // d/dx0 p = 2 x1^2
        let d0 = p.derivative(0);
        assert_eq!(d0.eval_re(&[7.0, 3.0]), c(18.0));
    }

    #[test]
    fn cancellation_prunes_terms() {
        let p = MPoly::<1>::var(0).sub(&MPoly::var(0));
        assert!(p.is_zero());
    }

    #[test]
    fn mixed_product_degrees() {
        let p = MPoly::<3>::var(0).mul(&MPoly::var(2)).mul(&MPoly::var(2));
        assert_eq!(p.degree(0), 1);
        assert_eq!(p.degree(1), 0);
        assert_eq!(p.degree(2), 2);
    }
}
