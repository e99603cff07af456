//! Closed term algebra for rescaled theta series.
//!
//! Every quantity in the operator chain is a finite sum of terms of the form
//!
//!   P(u, X) * exp(-pi u^2 |lambda|^2) * exp(2 pi i <lambda, X> u) * G(X)
//!
//! with u = e^{T/2}, P a polynomial, lambda an optional integer frequency
//! vector, and G an optional Euclidean Gaussian e^{-pi X.X}.  The operators
//! d/dT and Omega = (1/4pi) Delta + (1/2) <X, d/dX> map each term to a
//! single term with the same exponential factors, so repeated applications
//! stay exact: only the polynomial changes.  The Laplacian is contracted
//! with the Gram entries of the lattice, the operator acting on the dual
//! torus coordinate X.

use num_complex::Complex64;

use crate::lattice::{norm_sq, GramMatrix};
use crate::num::poly::MPoly;
use crate::par;

type C = Complex64;
const PI: f64 = std::f64::consts::PI;

/// Polynomial in (u, X1, X2); rank-1 terms simply never use X2.
pub type XuPoly = MPoly<3>;

/// Variable index of u = e^{T/2} inside [`XuPoly`].
pub const VAR_U: usize = 0;

/// Variable index of the coordinate X_axis (axis 0-based).
pub fn var_x(axis: usize) -> usize {
    axis + 1
}

/// One term of the algebra.
#[derive(Debug, Clone)]
pub struct GaussTerm {
    pub poly: XuPoly,
    /// Frequency vector of the lattice exponentials; `None` drops both.
    pub lambda: Option<Vec<i64>>,
    /// Whether the Euclidean Gaussian factor e^{-pi X.X} is present.
    pub gaussian: bool,
}

impl GaussTerm {
    /// The summand of the rescaled theta series at frequency `lambda`.
    pub fn lattice_term(lambda: Vec<i64>) -> Self {
        GaussTerm {
            poly: XuPoly::constant(C::new(1.0, 0.0)),
            lambda: Some(lambda),
            gaussian: false,
        }
    }

    /// The pure Gaussian e^{-pi X.X}.
    pub fn gaussian_term() -> Self {
        GaussTerm {
            poly: XuPoly::constant(C::new(1.0, 0.0)),
            lambda: None,
            gaussian: true,
        }
    }

    /// The constant function `c`.
    pub fn constant(c: C) -> Self {
        GaussTerm { poly: XuPoly::constant(c), lambda: None, gaussian: false }
    }

    /// Partial derivative in X_axis.
    pub fn d_x(&self, axis: usize) -> GaussTerm {
        let xv = var_x(axis);
        let mut p = self.poly.derivative(xv);
        if let Some(l) = &self.lambda {
            if l[axis] != 0 {
                // Chain rule through exp(2 pi i lambda_axis X_axis u).
                let c = C::new(0.0, 2.0 * PI * l[axis] as f64);
                p = p.add(&self.poly.mul_var(VAR_U).scale(c));
            }
        }
        if self.gaussian {
            p = p.add(&self.poly.mul_var(xv).scale(C::new(-2.0 * PI, 0.0)));
        }
        GaussTerm { poly: p, lambda: self.lambda.clone(), gaussian: self.gaussian }
    }

    /// Derivative in T.  Needs the Gram matrix for |lambda|^2.
    pub fn d_t(&self, h: &GramMatrix) -> GaussTerm {
        // u carries all T dependence: dT u = u/2, dT u^2 = u^2.
        let mut p = self.poly.derivative(VAR_U).mul_var(VAR_U).scale(C::new(0.5, 0.0));
        if let Some(l) = &self.lambda {
            let nsq = norm_sq(h, l);
            p = p.add(
                &self
                    .poly
                    .mul_var(VAR_U)
                    .mul_var(VAR_U)
                    .scale(C::new(-PI * nsq, 0.0)),
            );
            for (axis, &la) in l.iter().enumerate() {
                if la != 0 {
                    p = p.add(
                        &self
                            .poly
                            .mul_var(VAR_U)
                            .mul_var(var_x(axis))
                            .scale(C::new(0.0, PI * la as f64)),
                    );
                }
            }
        }
        GaussTerm { poly: p, lambda: self.lambda.clone(), gaussian: self.gaussian }
    }

    /// Value at coordinate `x` and time `t_big` (the rescaled time T).
    pub fn eval(&self, x: &[f64], t_big: f64, h: &GramMatrix) -> C {
        let u = (0.5 * t_big).exp();
        let mut point = [C::new(0.0, 0.0); 3];
        point[VAR_U] = C::new(u, 0.0);
        for (axis, &xa) in x.iter().enumerate() {
            point[var_x(axis)] = C::new(xa, 0.0);
        }
        let mut v = self.poly.eval(&point);
        if let Some(l) = &self.lambda {
            let nsq = norm_sq(h, l);
            let dot: f64 = l.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
            v *= C::new(-PI * nsq * u * u, 2.0 * PI * dot * u).exp();
        }
        if self.gaussian {
            let xx: f64 = x.iter().map(|&a| a * a).sum();
            v *= (-PI * xx).exp();
        }
        v
    }
}

/// Applies Omega termwise: (1/4pi) sum_ab h_ab d_a d_b + (1/2) sum_a X_a d_a.
pub fn apply_omega(series: &[GaussTerm], h: &GramMatrix) -> Vec<GaussTerm> {
    series.iter().map(|t| omega_term(t, h)).collect()
}

fn omega_term(term: &GaussTerm, h: &GramMatrix) -> GaussTerm {
    let n = h.rank();
    let firsts: Vec<GaussTerm> = (0..n).map(|a| term.d_x(a)).collect();
    let mut poly = XuPoly::zero();
    for a in 0..n {
        for b in 0..n {
            let second = firsts[b].d_x(a);
            poly = poly.add(&second.poly.scale(C::new(h.entry(a, b) / (4.0 * PI), 0.0)));
        }
        poly = poly.add(&firsts[a].poly.mul_var(var_x(a)).scale(C::new(0.5, 0.0)));
    }
    GaussTerm { poly, lambda: term.lambda.clone(), gaussian: term.gaussian }
}

/// Applies d/dT termwise.
pub fn apply_d_t(series: &[GaussTerm], h: &GramMatrix) -> Vec<GaussTerm> {
    series.iter().map(|t| t.d_t(h)).collect()
}

/// Termwise `scale * Omega(f) + shift * f`.
///
/// Composing this twice yields (2 Omega + n/2)^2 and friends without ever
/// leaving the algebra.
pub fn shifted_omega(
    series: &[GaussTerm],
    h: &GramMatrix,
    scale: f64,
    shift: f64,
) -> Vec<GaussTerm> {
    series
        .iter()
        .map(|t| {
            let o = omega_term(t, h);
            let poly = o
                .poly
                .scale(C::new(scale, 0.0))
                .add(&t.poly.scale(C::new(shift, 0.0)));
            GaussTerm { poly, lambda: t.lambda.clone(), gaussian: t.gaussian }
        })
        .collect()
}

/// Termwise scalar multiple.
pub fn series_scale(series: &[GaussTerm], c: C) -> Vec<GaussTerm> {
    series
        .iter()
        .map(|t| GaussTerm {
            poly: t.poly.scale(c),
            lambda: t.lambda.clone(),
            gaussian: t.gaussian,
        })
        .collect()
}

/// Termwise sum of two structurally aligned series (same factor layout at
/// each index, as produced by the termwise operators above).
pub fn series_add(a: &[GaussTerm], b: &[GaussTerm]) -> Vec<GaussTerm> {
    assert_eq!(a.len(), b.len(), "termwise sum needs aligned series");
    a.iter()
        .zip(b)
        .map(|(p, q)| {
            debug_assert_eq!(p.lambda, q.lambda);
            debug_assert_eq!(p.gaussian, q.gaussian);
            GaussTerm {
                poly: p.poly.add(&q.poly),
                lambda: p.lambda.clone(),
                gaussian: p.gaussian,
            }
        })
        .collect()
}

/// Evaluates the series at (x, T) with the deterministic tree reduction.
pub fn eval_series(series: &[GaussTerm], x: &[f64], t_big: f64, h: &GramMatrix) -> C {
    let vals = par::map_indexed(series.len(), |i| series[i].eval(x, t_big, h));
    par::sum_c64(&vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{gram_from_tau, GramMatrix, Rank2Tau};

    fn h1() -> GramMatrix {
        GramMatrix::rank1(1.0).unwrap()
    }

    #[test]
    fn omega_annihilates_constants() {
        let series = vec![GaussTerm::constant(C::new(3.5, -1.0))];
        let out = apply_omega(&series, &h1());
        assert!(out[0].poly.is_zero());
    }

    #[test]
    fn omega_on_gaussian_at_origin() {
        let series = vec![GaussTerm::gaussian_term()];
        let out = apply_omega(&series, &h1());
        let v = eval_series(&out, &[0.0], 0.0, &h1());
        assert!((v - C::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gaussian_is_quartic_eigenfunction_in_rank_one() {
        // (2 Omega + 1/2)^2 fixes e^{-pi X^2} with eigenvalue 1/4, checked
        // at the polynomial level: the result must be 1/4 times the input.
        let h = h1();
        let g = vec![GaussTerm::gaussian_term()];
        let once = shifted_omega(&g, &h, 2.0, 0.5);
        let twice = shifted_omega(&once, &h, 2.0, 0.5);
        let want = g[0].poly.scale(C::new(0.25, 0.0));
        let diff = twice[0].poly.sub(&want);
        assert!(diff.max_coeff() < 1e-14, "residual {}", diff.max_coeff());
    }

    #[test]
    fn omega_matches_time_derivative_on_lattice_term() {
        // On a frequency term at X = 0 both Omega and d/dT reduce to
        // multiplication by -pi e^T |lambda|^2.
        let h = h1();
        let series = vec![GaussTerm::lattice_term(vec![2])];
        let om = apply_omega(&series, &h);
        let dt = apply_d_t(&series, &h);
        for t_big in [0.0, 0.7, -1.3] {
            let a = eval_series(&om, &[0.0], t_big, &h);
            let b = eval_series(&dt, &[0.0], t_big, &h);
            let want = -PI * t_big.exp() * 4.0 * series[0].eval(&[0.0], t_big, &h);
            assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
            assert!((a - want).norm() < 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn time_derivative_matches_finite_difference() {
        let tau = Rank2Tau::new(-0.2, 0.95);
        let h = gram_from_tau(&tau).unwrap();
        let term = GaussTerm::lattice_term(vec![1, -2]);
        let x = [0.31, -0.12];
        let t_big = 0.4;
        let exact = term.d_t(&h).eval(&x, t_big, &h);
        let step = 1e-5;
        let fd = (term.eval(&x, t_big + step, &h) - term.eval(&x, t_big - step, &h))
            / (2.0 * step);
        assert!((exact - fd).norm() < 1e-8, "diff {}", (exact - fd).norm());
    }

    #[test]
    fn derivative_in_x_matches_finite_difference() {
        let tau = Rank2Tau::new(0.1, 0.9);
        let h = gram_from_tau(&tau).unwrap();
        let mut term = GaussTerm::lattice_term(vec![1, 1]);
        term.gaussian = true;
        let t_big = 0.3;
        let exact = term.d_x(1).eval(&[0.2, 0.4], t_big, &h);
        let step = 1e-6;
        let fd = (term.eval(&[0.2, 0.4 + step], t_big, &h)
            - term.eval(&[0.2, 0.4 - step], t_big, &h))
            / (2.0 * step);
        assert!((exact - fd).norm() < 1e-7);
    }

    #[test]
    fn omega_grows_x_degree_by_at_most_one_on_lattice_terms() {
        let h = gram_from_tau(&Rank2Tau::new(0.0, 1.0)).unwrap();
        let mut series = vec![GaussTerm::lattice_term(vec![3, -1])];
        for _ in 0..4 {
            let before: u8 = series[0].poly.degree(var_x(0)).max(series[0].poly.degree(var_x(1)));
            series = apply_omega(&series, &h);
            let after: u8 = series[0].poly.degree(var_x(0)).max(series[0].poly.degree(var_x(1)));
            assert!(after <= before + 1);
        }
    }
}
