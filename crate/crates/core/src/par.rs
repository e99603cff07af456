//! Deterministic data parallelism.
//!
//! Heavy inner loops (moduli-grid sweeps, J-profile construction, path
//! ensembles) evaluate elements in parallel but must produce bit-identical
//! results for any worker count, including the sequential build with the
//! `parallel` feature disabled.  The recipe: parallel evaluation collects
//! results in input order, and every reduction then runs sequentially over
//! that ordered buffer with a fixed-shape compensated tree.  Scheduling can
//! therefore never reorder a floating-point reduction.

use num_complex::Complex64;

/// Maps `f` over `0..n` and returns results in index order.
///
/// With the `parallel` feature this fans out over the global rayon pool;
/// without it, it is a plain sequential loop.  Either way the output vector
/// is ordered by index, so downstream reductions are scheduling-independent.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential fallback of [`map_indexed`].
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Caps the worker count of the global pool.
///
/// Call once at process start, before any parallel work.  Returns the
/// applied cap; with the `parallel` feature disabled every computation is
/// already sequential and the call is a no-op.  Results are bitwise
/// identical for every cap, so this only trades wall time.
#[cfg(feature = "parallel")]
pub fn limit_threads(n: usize) -> crate::Result<usize> {
    if n == 0 {
        return Err(crate::Error::domain("thread cap must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| crate::Error::resource(format!("thread pool already running: {e}")))?;
    Ok(n)
}

/// Sequential no-op counterpart of [`limit_threads`].
#[cfg(not(feature = "parallel"))]
pub fn limit_threads(n: usize) -> crate::Result<usize> {
    if n == 0 {
        return Err(crate::Error::domain("thread cap must be at least 1"));
    }
    Ok(1)
}

/// Chunk size of the fixed-shape reduction tree.
///
/// Small enough that per-chunk Neumaier compensation stays in registers,
/// large enough to amortize the recursion.
const CHUNK: usize = 32;

/// Sums `values` with a fixed-shape pairwise tree over Neumaier-compensated
/// chunks.
///
/// The summation order is a pure function of `values.len()`, so the result
/// is bitwise reproducible and the error grows like O(log n) rather than
/// O(n) in the straight loop.
pub fn sum_f64(values: &[f64]) -> f64 {
    if values.len() <= CHUNK {
        return neumaier(values);
    }
    let mid = (values.len() / 2).div_euclid(CHUNK).max(1) * CHUNK;
    sum_f64(&values[..mid]) + sum_f64(&values[mid..])
}

/// Complex counterpart of [`sum_f64`] (componentwise trees).
pub fn sum_c64(values: &[Complex64]) -> Complex64 {
    if values.len() <= CHUNK {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for &v in values {
            let t = sum + v;
            comp.re += branch_comp(sum.re, v.re, t.re);
            comp.im += branch_comp(sum.im, v.im, t.im);
            sum = t;
        }
        return sum + comp;
    }
    let mid = (values.len() / 2).div_euclid(CHUNK).max(1) * CHUNK;
    sum_c64(&values[..mid]) + sum_c64(&values[mid..])
}

/// Neumaier (improved Kahan) summation of a short slice.
fn neumaier(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        comp += branch_comp(sum, v, t);
        sum = t;
    }
    sum + comp
}

/// Recovers the rounding error of `sum + v = t`, branching on magnitude.
#[inline]
fn branch_comp(sum: f64, v: f64, t: f64) -> f64 {
    if sum.abs() >= v.abs() {
        (sum - t) + v
    } else {
        (v - t) + sum
    }
}

/// Dot product with the deterministic tree reduction.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    sum_f64(&prods)
}
