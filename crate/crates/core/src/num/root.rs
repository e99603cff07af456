//! Bracketing root refinement for real-valued scans.

use crate::error::Error;
use crate::Result;

/// Refines a sign-change bracket [a, b] by bisection until the bracket
/// width falls below `tol`, returning (root midpoint, final bracket).
///
/// Requires f(a) and f(b) to have opposite signs (zero endpoints count as
/// roots immediately).  Bisection is preferred over secant here because the
/// scanned functions can be extremely flat near high-ordinate zeros, where
/// secant steps stall without shrinking the bracket.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, (f64, f64))> {
    if !(b > a) || !(tol > 0.0) {
        return Err(Error::domain(format!(
            "bisect needs b > a and tol > 0, got [{a}, {b}], tol {tol}"
        )));
    }
    let mut lo = a;
    let mut hi = b;
    let mut flo = f(lo);
    if flo == 0.0 {
        return Ok((lo, (lo, lo)));
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Ok((hi, (hi, hi)));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::domain(format!(
            "no sign change on [{a}, {b}]: f(a) = {flo:e}, f(b) = {fhi:e}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, (mid, mid)));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), (lo, hi)))
}
