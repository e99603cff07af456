//! Shared numerical kernels: Gauss-Legendre quadrature, special functions,
//! cubic splines, root bracketing, and small multivariate polynomials.
//!
//! These sit close to the mathematical surface of the crate (they feed the
//! reference zeta route and the J-profile quadrature), so they are written
//! here and pinned against 50-digit reference values rather than pulled in
//! as dependencies.

pub mod poly;
pub mod quad;
pub mod root;
pub mod special;
pub mod spline;
