//! Lattice theta functions, their rescaled form, and heat-equation
//! residuals.
//!
//! theta_L(x, t) = sum over lattice vectors of e^{-pi t |lambda|^2}
//! e^{2 pi i <lambda, x>}, truncated with a rigorous Gaussian tail bound.
//! The rescaled series Theta(X, T) = theta(X e^{T/2}, e^T) satisfies
//! (d/dT - Omega) Theta = 0 term by term, which the residual operations
//! verify through the exact term algebra of [`crate::terms`].

use num_complex::Complex64;

use crate::error::Error;
use crate::lattice::{shortest_vectors, GramMatrix};
use crate::terms::{apply_d_t, apply_omega, eval_series, GaussTerm};
use crate::{par, Result};

type C = Complex64;
const PI: f64 = std::f64::consts::PI;

/// Truncation contract: summing over |lambda|^2 <= radius leaves a tail of
/// absolute size at most eps.
#[derive(Debug, Clone, Copy)]
pub struct TruncationSpec {
    pub eps: f64,
    pub radius: f64,
}

impl TruncationSpec {
    /// Chooses a radius for the lattice `h` at time `t` from the bound
    ///
    ///   sum_{|lambda|^2 > R} e^{-pi t |lambda|^2}
    ///     <= e^{-pi t R / 2} * prod_axis (1 + 2 sum_{k>=1} e^{-a k^2})
    ///
    /// with a = pi t min_eig(H) / 2: half the exponent pays for the tail
    /// cutoff, the other half dominates a product of one-dimensional
    /// Gaussian sums bounded through the smallest eigenvalue.
    pub fn for_lattice(h: &GramMatrix, t: f64, eps: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("theta time must be positive, got {t}")));
        }
        if !(eps > 0.0) {
            return Err(Error::domain(format!("eps must be positive, got {eps}")));
        }
        let radius = 2.0 / (PI * t) * (Self::envelope(h, t) / eps).ln();
        // Tiny radii are legal (the bound then certifies the bare lambda = 0
        // term) but the enumeration needs a positive bound.
        Ok(TruncationSpec { eps, radius: radius.max(1.0) })
    }

    /// The envelope factor multiplying e^{-pi t R / 2} in the tail bound.
    fn envelope(h: &GramMatrix, t: f64) -> f64 {
        let a = 0.5 * PI * t * h.min_eigenvalue();
        // sum_{k>=1} e^{-a k^2} <= sum_{k>=1} e^{-a k} = e^{-a}/(1 - e^{-a}).
        let row = (-a).exp() / (1.0 - (-a).exp());
        (1.0 + 2.0 * row).powi(h.rank() as i32)
    }

    /// Rigorous bound on the discarded tail for this radius.
    pub fn tail_bound(&self, h: &GramMatrix, t: f64) -> f64 {
        (-0.5 * PI * t * self.radius).exp() * Self::envelope(h, t)
    }
}

/// Theta series of the lattice at dual-torus coordinate `x` and time `t`.
///
/// The truncation error is at most `eps` in absolute value.
pub fn theta(h: &GramMatrix, x: &[f64], t: f64, eps: f64) -> Result<C> {
    Ok(C::new(1.0, 0.0) + theta_minus_one(h, x, t, eps)?)
}

/// theta - 1: the sum over nonzero lattice vectors only.
///
/// At large t the full series is 1 plus a quantity far below the
/// round-off of 1, so subtracting after summing would destroy it; this
/// entry point keeps the small part exact in relative terms.
pub fn theta_minus_one(h: &GramMatrix, x: &[f64], t: f64, eps: f64) -> Result<C> {
    if x.len() != h.rank() {
        return Err(Error::domain(format!(
            "coordinate length {} does not match rank {}",
            x.len(),
            h.rank()
        )));
    }
    let spec = TruncationSpec::for_lattice(h, t, eps)?;
    let pts = shortest_vectors(h, spec.radius)?;
    let vals = par::map_indexed(pts.len(), |i| {
        let (l, nsq) = &pts[i];
        let dot: f64 = l.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
        (-PI * t * nsq).exp() * C::new(0.0, 2.0 * PI * dot).exp()
    });
    Ok(par::sum_c64(&vals))
}

/// Rescaled theta series Theta(X, T) = theta(X e^{T/2}, e^T).
pub fn big_theta(h: &GramMatrix, x_big: &[f64], t_big: f64, eps: f64) -> Result<C> {
    let scale = (0.5 * t_big).exp();
    let x: Vec<f64> = x_big.iter().map(|&v| v * scale).collect();
    theta(h, &x, t_big.exp(), eps)
}

/// Frequency terms of the rescaled series, truncated for time e^T.
pub fn big_theta_terms(h: &GramMatrix, t_big: f64, eps: f64) -> Result<Vec<GaussTerm>> {
    let spec = TruncationSpec::for_lattice(h, t_big.exp(), eps)?;
    let pts = shortest_vectors(h, spec.radius)?;
    let mut series = vec![GaussTerm::lattice_term(vec![0; h.rank()])];
    series.extend(pts.into_iter().map(|(l, _)| GaussTerm::lattice_term(l)));
    Ok(series)
}

/// Residual of the heat equation (1/4pi) Delta theta = d theta / dt, with
/// the Laplacian exact termwise and the time derivative by central
/// differences of step `fd_step`.
pub fn heat_residual(h: &GramMatrix, x: &[f64], t: f64, fd_step: f64) -> Result<f64> {
    if !(t > fd_step && fd_step > 0.0) {
        return Err(Error::domain(format!(
            "need t > fd_step > 0, got t = {t}, fd_step = {fd_step}"
        )));
    }
    let eps = 1e-14;
    let lap = laplacian_quarter_pi(h, x, t, eps)?;
    let dt = (theta(h, x, t + fd_step, eps)? - theta(h, x, t - fd_step, eps)?)
        / (2.0 * fd_step);
    Ok((lap - dt).norm())
}

/// Residual of the heat equation with both sides exact termwise.
///
/// The two sides contract |lambda|^2 through different loop orders, so this
/// is a float-association check of the identity rather than a tautology.
pub fn heat_residual_exact(h: &GramMatrix, x: &[f64], t: f64) -> Result<f64> {
    let eps = 1e-14;
    let lap = laplacian_quarter_pi(h, x, t, eps)?;
    let spec = TruncationSpec::for_lattice(h, t, eps)?;
    let pts = shortest_vectors(h, spec.radius)?;
    let vals = par::map_indexed(pts.len(), |i| {
        let (l, nsq) = &pts[i];
        let dot: f64 = l.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
        -PI * nsq * (-PI * t * nsq).exp() * C::new(0.0, 2.0 * PI * dot).exp()
    });
    let dt = par::sum_c64(&vals);
    Ok((lap - dt).norm())
}

/// (1/4pi) Delta theta with the second derivatives evaluated exactly on each
/// frequency term; the contraction runs as sum_a lambda_a (H lambda)_a.
fn laplacian_quarter_pi(h: &GramMatrix, x: &[f64], t: f64, eps: f64) -> Result<C> {
    let spec = TruncationSpec::for_lattice(h, t, eps)?;
    let pts = shortest_vectors(h, spec.radius)?;
    let n = h.rank();
    let vals = par::map_indexed(pts.len(), |i| {
        let (l, nsq) = &pts[i];
        let mut contracted = 0.0;
        for a in 0..n {
            let mut row = 0.0;
            for b in 0..n {
                row += h.entry(a, b) * l[b] as f64;
            }
            contracted += l[a] as f64 * row;
        }
        let dot: f64 = l.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum();
        -PI * contracted * (-PI * t * nsq).exp() * C::new(0.0, 2.0 * PI * dot).exp()
    });
    Ok(par::sum_c64(&vals))
}

/// Residual of (d/dT - Omega) Theta = 0 with both operators exact on the
/// term algebra.  Vanishes to truncation plus round-off.
pub fn big_theta_pde_residual(h: &GramMatrix, x_big: &[f64], t_big: f64) -> Result<f64> {
    let series = big_theta_terms(h, t_big, 1e-14)?;
    let lhs = eval_series(&apply_d_t(&series, h), x_big, t_big, h);
    let rhs = eval_series(&apply_omega(&series, h), x_big, t_big, h);
    Ok((lhs - rhs).norm())
}

/// Residual of the same identity with d/dT replaced by central differences
/// and truncation at `eps`; bounded by the finite-difference and truncation
/// budget rather than round-off.
pub fn big_theta_pde_residual_fd(
    h: &GramMatrix,
    x_big: &[f64],
    t_big: f64,
    eps: f64,
    fd_step: f64,
) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::domain("fd_step must be positive"));
    }
    let series = big_theta_terms(h, t_big, eps)?;
    let omega = eval_series(&apply_omega(&series, h), x_big, t_big, h);
    let dt = (big_theta(h, x_big, t_big + fd_step, eps)?
        - big_theta(h, x_big, t_big - fd_step, eps)?)
        / (2.0 * fd_step);
    Ok((dt - omega).norm())
}
