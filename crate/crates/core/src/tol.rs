//! Centralized numerical tolerances with their origin stories.
//!
//! Every tolerance used by more than one call site lives here, so that the
//! accuracy budget of the whole pipeline can be audited in one place.  Each
//! constant documents why its magnitude is attainable (what limits accuracy
//! from below) and why it is demanding enough to catch real defects.

/// Default absolute truncation target for theta-series tails.
///
/// The tail bound is a rigorous integral comparison, so the summed value is
/// exact to this target plus rounding; 1e-12 leaves two orders of headroom
/// above f64 rounding noise for sums with O(1e2) terms of mixed sign.
pub const THETA_EPS: f64 = 1e-12;

/// Exact-in-both-variables heat residuals (termwise time derivative).
///
/// The identity holds term by term, so only accumulated rounding remains:
/// O(1e-16) per term over at most a few hundred terms.
pub const HEAT_TERMWISE: f64 = 1e-12;

/// Heat residual with a central finite difference in time, step 1e-4.
///
/// Truncation error is (h^2/6)|d3 theta/dt3| ~ 1e-8 * O(30) near t = 1;
/// cancellation adds eps/h ~ 1e-12. A 1e-6 ceiling has ~30x headroom.
pub const HEAT_FD: f64 = 1e-6;

/// Central finite-difference step for time derivatives of theta.
pub const HEAT_FD_STEP: f64 = 1e-4;

/// Rank-1 agreement between the structural integral and the reference
/// completed zeta.
///
/// The integral route carries quadrature error ~1e-13 (Gauss panels on a
/// smooth integrand) and tail error < 1e-14; the reference route is good to
/// 1e-10 relative. 1e-8 absolute on |Im s| <= 30 is a strict end-to-end gate.
pub const RANK1_ROUTE_AGREEMENT: f64 = 1e-8;

/// Reference completed-zeta relative accuracy promised for |s| <= 50.
pub const REFERENCE_ZETA_REL: f64 = 1e-10;

/// Bisection tolerance for critical-line zero ordinates.
pub const ZERO_TOL: f64 = 1e-5;

/// Richardson-extrapolated residue of zetahat at s = 1 vs the moduli volume.
///
/// With offsets 1e-2 and 1e-3 the linear extrapolation leaves an
/// O(eps1*eps2 * f'') ~ 5e-7 model error on top of quadrature error.
pub const RESIDUE_TOL: f64 = 1e-4;

/// Per-lattice resolvent identity residual.
///
/// Limited by the T-quadrature of the operator-applied integrand; the
/// adaptive panels target 1e-9, so 1e-6 has three orders of headroom while
/// still refuting any wrong sign or wrong normalization immediately.
pub const RESOLVENT_IDENTITY: f64 = 1e-6;

/// |Int Phi(0,gamma) dmu| at a cached critical-line zero.
pub const AVG_PHI_AT_ZERO: f64 = 1e-5;

/// Pairwise agreement of the three Fokker-Planck operator forms.
///
/// All three are exact polynomial-coefficient evaluations; disagreement can
/// only come from rounding in O(10)-term coefficient assembly, so 1e-9
/// (absolute, on O(1..100) values) is conservative yet unforgiving.
pub const FP_FORM_AGREEMENT: f64 = 1e-9;

/// Rearrangement-identity residuals of the operator calculus.
pub const FP_LEMMA_IDENTITY: f64 = 1e-10;

/// Windowed-FT validation gate for the rank-1 ray formula.
///
/// The numerical transform (Simpson, half-width 30, 2^14 panels, leading
/// 1/X tail handled analytically) is accurate to ~1e-5; the gate at 1e-4
/// still rejects any wrong mode weight (smallest is ~8.6e-2) or wrong
/// ray boundary by many orders.
pub const RAY_FT_VALIDATION: f64 = 1e-4;

/// Armitage ODE residual at cached zeros, off the integer singular support.
pub const ARMITAGE_AT_ZERO: f64 = 1e-5;

/// Demanded lower bound of the Armitage residual at midpoints between
/// zeros (zero-sensitivity floor).
pub const ARMITAGE_MIDPOINT_FLOOR: f64 = 1e-3;

/// Proximity guard around integers for ray-formula evaluation.
pub const RAY_INTEGER_GUARD: f64 = 1e-6;

/// Mass conservation per implicit step of the 1-d Fokker-Planck solver.
pub const FP1D_MASS: f64 = 1e-10;

/// L1 distance between the solver density and a simulation histogram.
pub const FP1D_VS_HISTOGRAM_L1: f64 = 0.05;

/// Discrete forward/backward adjoint residual on a 2048-point grid.
pub const ADJOINT_RESIDUAL: f64 = 1e-6;

/// Kramers-Moyal coefficient round-trip (model -> D -> model).
pub const KM_ROUNDTRIP: f64 = 1e-10;

/// Exact matrix identities (Gram determinant, dual involution).
pub const MATRIX_IDENTITY: f64 = 1e-14;

/// Multiplier applied to a value's error estimate when checking that an
/// analytically real quantity has negligible imaginary part.
pub const REALNESS_FACTOR: f64 = 10.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_are_positive_and_ordered() {
        for &t in &[
            THETA_EPS,
            HEAT_TERMWISE,
            HEAT_FD,
            RANK1_ROUTE_AGREEMENT,
            ZERO_TOL,
            RESIDUE_TOL,
            RESOLVENT_IDENTITY,
            AVG_PHI_AT_ZERO,
            FP_FORM_AGREEMENT,
            FP_LEMMA_IDENTITY,
            RAY_FT_VALIDATION,
            ARMITAGE_AT_ZERO,
            FP1D_MASS,
            ADJOINT_RESIDUAL,
            KM_ROUNDTRIP,
            MATRIX_IDENTITY,
        ] {
            assert!(t > 0.0 && t < 1.0);
        }
        assert!(HEAT_TERMWISE < HEAT_FD);
        assert!(FP_LEMMA_IDENTITY < FP_FORM_AGREEMENT);
        assert!(ARMITAGE_AT_ZERO < ARMITAGE_MIDPOINT_FLOOR);
        assert!(THETA_EPS < RANK1_ROUTE_AGREEMENT);
    }
}
