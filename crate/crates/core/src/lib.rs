//! Numerical laboratory for semi-stable lattice theta series, non-abelian
//! zeta functions of ranks 1 and 2, their resolvent identities, and the
//! averaged Fokker-Planck operator calculus on the Fourier side, together
//! with the Langevin / Kramers-Moyal machinery used to cross-check the
//! Fokker-Planck normalizations.
//!
//! The computational chain is:
//!
//! ```text
//! lattice   Gram matrices H, norms |lambda|^2, duals, shortest vectors,
//!           semi-stability (rank 2: tau = x + iy in the truncated
//!           fundamental domain D1).
//! moduli    quadrature over D1 with measure dx dy / y^2 and a nested
//!           refinement error model; vol(D1) = pi/3 - 1.
//! theta     theta_Lambda(x,t) with rigorous truncation, the substitution
//!           Theta(X,T) = theta(X e^{T/2}, e^T), the generator
//!           Omega = (1/4 pi) Delta_dual + (1/2) <X, d/dX>, and exact
//!           term-algebra heat residuals.
//! zeta      zetahat_n(s) = vol(M[1])/(s(s-1))
//!           + (n/2) Int_1^inf (t^{ns/2} + t^{n(1-s)/2}) J(t) dt/t,
//!           J(t) = Int_{M[1]} (theta - 1) dmu; rank 1 reproduces the
//!           completed Riemann zeta; critical-line zero scanning.
//! resolvent Phi(X,gamma), kappa(X,gamma) and the per-lattice identity
//!           [(2 Omega + n/2)^2 + (n gamma)^2] Phi = -kappa.
//! fokker_planck  the Fourier-conjugated operator in three equivalent
//!           forms, its rearrangement identities, the rank-1 ray
//!           representation of PhiHat, and pointwise ODE residuals.
//! langevin  Stratonovich SDE ensembles, Kramers-Moyal coefficient
//!           estimation, and a conservative 1-d Fokker-Planck solver.
//! ```
//!
//! All floating-point claims carried by the public API are pinned in the
//! test suites against values computed with 50-digit arithmetic by the
//! scripts in `tools/reference/`.

pub mod error;
pub mod fokker_planck;
pub mod langevin;
pub mod lattice;
pub mod moduli;
pub mod num;
pub mod par;
pub mod resolvent;
pub mod terms;
pub mod theta;
pub mod tol;
pub mod zeros;
pub mod zeta;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
