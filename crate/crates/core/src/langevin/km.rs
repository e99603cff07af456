//! Kramers-Moyal coefficients: estimation from transition records, closed
//! forms for the catalogue models, and square-root reconstruction.
//!
//! Under the variance-2dt noise normalization the Stratonovich drift tables
//! read D1 = h + g'g and D2 = g g^T, with every higher order vanishing in
//! the tau -> 0 limit.  Estimation measures conditional moments per state
//! bin on the fixed ladder of lags and extrapolates linearly to tau = 0,
//! because the leading finite-lag bias of each conditional moment is first
//! order in the lag.  Error bars come from batch means over contiguous path
//! groups.

use std::path::Path;

use serde::Serialize;

use super::model::{SDEModel, MAX_DIM};
use super::simulate::TransitionEnsemble;
use crate::{Error, Result};

/// Batches of the batch-means error estimate.
const BATCHES: usize = 16;

/// Fewest records per batch and lag for the batch to count.
const MIN_BATCH_SAMPLES: u64 = 8;

/// Fewest valid batches for a bin to stay unmasked.
const MIN_VALID_BATCHES: usize = 4;

/// Central-difference step of the square-root field derivatives.
const RECON_FD_STEP: f64 = 1e-5;

/// Estimated coefficient of one order on a state grid.
#[derive(Debug, Clone)]
pub struct KMEstimate {
    /// Kramers-Moyal order.
    pub order: u32,
    /// Mean base state per bin (midpoint where a bin holds no records).
    pub centers: Vec<f64>,
    /// Extrapolated coefficient per bin; NaN where masked.
    pub values: Vec<f64>,
    /// Batch-means standard error per bin; NaN where masked.
    pub errors: Vec<f64>,
    /// Bins with too few records for a batched estimate.
    pub masked: Vec<bool>,
    /// Lag times the extrapolation used.
    pub ladder: Vec<f64>,
    /// Pooled conditional moments per bin and ladder entry, for linearity
    /// diagnostics; NaN where a lag holds no records.
    pub ladder_values: Vec<Vec<f64>>,
    /// One entry per masked bin.
    pub warnings: Vec<String>,
}

/// Serialized estimate row of the CSV interchange format.
#[derive(Debug, Serialize)]
struct CsvRow {
    order: u32,
    center: f64,
    value: f64,
    error: f64,
    masked: bool,
}

impl KMEstimate {
    pub fn bins(&self) -> usize {
        self.centers.len()
    }

    pub fn masked_bins(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }

    /// Writes the table as CSV with columns order, center, value, error,
    /// masked.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.bins() {
            w.serialize(CsvRow {
                order: self.order,
                center: self.centers[i],
                value: self.values[i],
                error: self.errors[i],
                masked: self.masked[i],
            })?;
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }
}

fn factorial(order: u32) -> f64 {
    match order {
        1 => 1.0,
        2 => 2.0,
        3 => 6.0,
        4 => 24.0,
        _ => unreachable!("orders are validated to 1..=4"),
    }
}

/// Least-squares intercept of y(t) at t = 0.
fn linear_intercept(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let st: f64 = ts.iter().sum();
    let sy: f64 = ys.iter().sum();
    let stt: f64 = ts.iter().map(|t| t * t).sum();
    let sty: f64 = ts.iter().zip(ys).map(|(t, y)| t * y).sum();
    let det = n * stt - st * st;
    let slope = (n * sty - st * sy) / det;
    (sy - slope * st) / n
}

/// Estimates D^(order) over `bins` uniform bins spanning the recorded base
/// states.
pub fn km_estimate(
    ens: &TransitionEnsemble,
    order: u32,
    ladder: &[f64],
    bins: usize,
) -> Result<KMEstimate> {
    if ens.is_empty() {
        return Err(Error::domain("the transition ensemble holds no records"));
    }
    let (base, _) = ens.records();
    let lo = base.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::domain("the recorded states are degenerate; cannot bin"));
    }
    km_estimate_in_range(ens, order, ladder, bins, lo, hi)
}

/// Estimates D^(order) over `bins` uniform bins on [lo, hi); records outside
/// the range are ignored.
pub fn km_estimate_in_range(
    ens: &TransitionEnsemble,
    order: u32,
    ladder: &[f64],
    bins: usize,
    lo: f64,
    hi: f64,
) -> Result<KMEstimate> {
    if !(1..=4).contains(&order) {
        return Err(Error::domain(format!("order must lie in 1..=4, got {order}")));
    }
    if bins < 2 {
        return Err(Error::domain("at least two state bins are required"));
    }
    if ens.is_empty() {
        return Err(Error::domain("the transition ensemble holds no records"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::domain(format!("bad bin range [{lo}, {hi}]")));
    }
    if ladder.len() < 2 {
        return Err(Error::domain("linear extrapolation needs at least two ladder entries"));
    }
    let taus = ens.taus();
    let mut slots = Vec::with_capacity(ladder.len());
    for &tau in ladder {
        let slot = taus
            .iter()
            .position(|&t| (t - tau).abs() <= 1e-9 * t.max(tau))
            .ok_or_else(|| {
                Error::domain(format!(
                    "ladder entry {tau} is not one of the sampled lags {taus:?}"
                ))
            })?;
        if slots.contains(&slot) {
            return Err(Error::domain(format!("ladder entry {tau} appears twice")));
        }
        slots.push(slot);
    }

    let (base, images) = ens.records();
    let n = base.len();
    let lads = slots.len();
    let width = (hi - lo) / bins as f64;
    let fact = factorial(order);

    let mut counts = vec![0u64; bins * BATCHES * lads];
    let mut sums = vec![0.0f64; bins * BATCHES * lads];
    let mut base_count = vec![0u64; bins];
    let mut base_sum = vec![0.0f64; bins];

    for (idx, (&x, img)) in base.iter().zip(images).enumerate() {
        if !(lo..hi).contains(&x) {
            continue;
        }
        let bin = (((x - lo) / width) as usize).min(bins - 1);
        let batch = idx * BATCHES / n;
        base_count[bin] += 1;
        base_sum[bin] += x;
        for (l, &slot) in slots.iter().enumerate() {
            let delta = img[slot] - x;
            let cell = (bin * BATCHES + batch) * lads + l;
            counts[cell] += 1;
            sums[cell] += delta.powi(order as i32);
        }
    }

    let ladder_taus: Vec<f64> = slots.iter().map(|&s| taus[s]).collect();
    let mut centers = vec![0.0; bins];
    let mut values = vec![f64::NAN; bins];
    let mut errors = vec![f64::NAN; bins];
    let mut masked = vec![false; bins];
    let mut ladder_values = vec![vec![f64::NAN; lads]; bins];
    let mut warnings = Vec::new();

    for bin in 0..bins {
        centers[bin] = if base_count[bin] > 0 {
            base_sum[bin] / base_count[bin] as f64
        } else {
            lo + (bin as f64 + 0.5) * width
        };

        for (l, &tau) in ladder_taus.iter().enumerate() {
            let mut c = 0u64;
            let mut s = 0.0;
            for batch in 0..BATCHES {
                let cell = (bin * BATCHES + batch) * lads + l;
                c += counts[cell];
                s += sums[cell];
            }
            if c > 0 {
                ladder_values[bin][l] = s / (c as f64 * fact * tau);
            }
        }

        let mut intercepts = Vec::with_capacity(BATCHES);
        for batch in 0..BATCHES {
            let mut moments = Vec::with_capacity(lads);
            for (l, &tau) in ladder_taus.iter().enumerate() {
                let cell = (bin * BATCHES + batch) * lads + l;
                if counts[cell] < MIN_BATCH_SAMPLES {
                    moments.clear();
                    break;
                }
                moments.push(sums[cell] / (counts[cell] as f64 * fact * tau));
            }
            if !moments.is_empty() {
                intercepts.push(linear_intercept(&ladder_taus, &moments));
            }
        }

        if intercepts.len() < MIN_VALID_BATCHES {
            masked[bin] = true;
            warnings.push(format!(
                "state bin {bin} ([{:.6}, {:.6})) masked: {} of {BATCHES} batches had \
                 enough records",
                lo + bin as f64 * width,
                lo + (bin as f64 + 1.0) * width,
                intercepts.len(),
            ));
            continue;
        }

        let nb = intercepts.len() as f64;
        let mean = intercepts.iter().sum::<f64>() / nb;
        let var = intercepts.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (nb - 1.0);
        values[bin] = mean;
        errors[bin] = (var / nb).sqrt();
    }

    Ok(KMEstimate {
        order,
        centers,
        values,
        errors,
        masked,
        ladder: ladder_taus,
        ladder_values,
        warnings,
    })
}

/// Drift vector and diffusion matrix of a model at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct KmCoefficients {
    pub dim: usize,
    /// D_i = h_i + sum_kj g_kj d_k g_ij.
    pub drift: Vec<f64>,
    /// D_ij = sum_k g_ik g_jk, row-major.
    pub diffusion: Vec<f64>,
}

/// Closed-form coefficients of a catalogue model.
pub fn km_theoretical(model: &SDEModel, x: &[f64]) -> Result<KmCoefficients> {
    let d = model.dim();
    let h = model.drift(x)?;
    let g = model.noise_matrix(x)?;
    let mut drift = h;
    for k in 0..d {
        let jac = model.noise_jacobian(x, k)?;
        for i in 0..d {
            let mut term = 0.0;
            for j in 0..d {
                term += g[k * d + j] * jac[i * d + j];
            }
            drift[i] += term;
        }
    }
    let mut diffusion = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += g[i * d + k] * g[j * d + k];
            }
            diffusion[i * d + j] = s;
        }
    }
    Ok(KmCoefficients { dim: d, drift, diffusion })
}

/// Jacobi eigendecomposition of a small symmetric matrix.
///
/// Returns eigenvalues and the orthogonal matrix V with eigenvectors in
/// columns, row-major.
fn jacobi_eigen(m: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tol = 1e-15 * (1.0 + scale);
    for _ in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eig = (0..n).map(|i| a[i * n + i]).collect();
    (eig, v)
}

/// Symmetric positive square root of a positive semi-definite matrix.
fn sqrt_psd(m: &[f64], dim: usize) -> Result<Vec<f64>> {
    if m.len() != dim * dim {
        return Err(Error::domain(format!(
            "diffusion matrix has {} entries, expected {}",
            m.len(),
            dim * dim
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("diffusion matrix entries must be finite"));
    }
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    for i in 0..dim {
        for j in (i + 1)..dim {
            if (m[i * dim + j] - m[j * dim + i]).abs() > 1e-8 * (1.0 + scale) {
                return Err(Error::domain("diffusion matrix must be symmetric"));
            }
        }
    }
    let (eig, v) = jacobi_eigen(m, dim);
    let mut roots = Vec::with_capacity(dim);
    for &l in &eig {
        if l < -1e-10 * (1.0 + scale) {
            return Err(Error::domain(format!(
                "diffusion matrix is not positive semi-definite (eigenvalue {l})"
            )));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let mut s = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += v[i * dim + k] * roots[k] * v[j * dim + k];
            }
            s[i * dim + j] = acc;
        }
    }
    Ok(s)
}

fn evaluate_diffusion(
    d2: &dyn Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let m = d2(x);
    if m.len() != dim * dim {
        return Err(Error::domain(format!(
            "diffusion closure returned {} entries, expected {}",
            m.len(),
            dim * dim
        )));
    }
    Ok(m)
}

/// sum_kj S_kj d_k S_ij of the square-root field S = D^{1/2}, derivatives by
/// central differences.
fn sqrt_drift_correction(
    d2: &dyn Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    let s = sqrt_psd(&evaluate_diffusion(d2, dim, x)?, dim)?;
    let mut corr = vec![0.0; dim];
    let mut probe = x.to_vec();
    for k in 0..dim {
        let h = RECON_FD_STEP * (1.0 + x[k].abs());
        probe[k] = x[k] + h;
        let sp = sqrt_psd(&evaluate_diffusion(d2, dim, &probe)?, dim)?;
        probe[k] = x[k] - h;
        let sm = sqrt_psd(&evaluate_diffusion(d2, dim, &probe)?, dim)?;
        probe[k] = x[k];
        for i in 0..dim {
            let mut term = 0.0;
            for j in 0..dim {
                let ds = (sp[i * dim + j] - sm[i * dim + j]) / (2.0 * h);
                term += s[k * dim + j] * ds;
            }
            corr[i] += term;
        }
    }
    Ok(corr)
}

/// Langevin coefficients recovered from Kramers-Moyal data.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinCoefficients {
    pub dim: usize,
    /// h_i = D_i - sum_kj (D^{1/2})_kj d_k (D^{1/2})_ij.
    pub drift: Vec<f64>,
    /// g = D^{1/2}, row-major.
    pub noise: Vec<f64>,
}

/// Recovers (h, g) at `x` from drift and diffusion closures.
///
/// The noise matrix is the symmetric positive square root of the diffusion
/// matrix; a diffusion matrix with a negative eigenvalue is rejected.
pub fn reconstruct_langevin(
    dim: usize,
    d1: &dyn Fn(&[f64]) -> Vec<f64>,
    d2: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
) -> Result<LangevinCoefficients> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::domain(format!("dimension must lie in 1..={MAX_DIM}, got {dim}")));
    }
    if x.len() != dim {
        return Err(Error::domain(format!(
            "state has {} coordinates but dimension is {dim}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("state coordinates must be finite"));
    }
    let noise = sqrt_psd(&evaluate_diffusion(d2, dim, x)?, dim)?;
    let corr = sqrt_drift_correction(d2, dim, x)?;
    let dv = d1(x);
    if dv.len() != dim {
        return Err(Error::domain(format!(
            "drift closure returned {} entries, expected {dim}",
            dv.len()
        )));
    }
    let drift = dv.iter().zip(&corr).map(|(d, c)| d - c).collect();
    Ok(LangevinCoefficients { dim, drift, noise })
}

/// Largest coefficient gap of the reconstruction round trip at `x`.
///
/// The model's closed-form (D_i, D_ij) are handed to the reconstruction as
/// closures; the recovered (h, g) are then pushed forward through the same
/// coefficient formulas and compared entry by entry.
pub fn km_round_trip_gap(model: &SDEModel, x: &[f64]) -> Result<f64> {
    let dim = model.dim();
    let orig = km_theoretical(model, x)?;
    let d1c = |y: &[f64]| -> Vec<f64> {
        km_theoretical(model, y).expect("catalogue coefficients are defined everywhere").drift
    };
    let d2c = |y: &[f64]| -> Vec<f64> {
        km_theoretical(model, y)
            .expect("catalogue coefficients are defined everywhere")
            .diffusion
    };
    let rec = reconstruct_langevin(dim, &d1c, &d2c, x)?;

    let corr = sqrt_drift_correction(&d2c, dim, x)?;
    let mut gap = 0.0f64;
    for i in 0..dim {
        let forward = rec.drift[i] + corr[i];
        gap = gap.max((forward - orig.drift[i]).abs());
    }
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += rec.noise[i * dim + k] * rec.noise[j * dim + k];
            }
            gap = gap.max((acc - orig.diffusion[i * dim + j]).abs());
        }
    }
    Ok(gap)
}
