//! Conservative 1-d Fokker-Planck solves and the backward operator.
//!
//! The forward equation dW/dt = -d(D1 W)/dx + d^2(D2 W)/dx^2 is discretized
//! in flux form on a uniform cell grid with Chang-Cooper face weights, so
//! total mass telescopes exactly and the implicit Euler update is an
//! M-matrix solve that keeps densities nonnegative.  Reflecting boundaries
//! are the zero-flux faces at both ends.
//!
//! Sign caution on the backward side: the classical display form
//! -D1 f' + D2 f'' (implemented verbatim by [`backward_apply`]) is not the
//! adjoint of the forward operator above; two integrations by parts flip
//! the drift sign, so the adjoint carries +D1 f' + D2 f''.  The discrete
//! transpose [`adjoint_apply_grid`] reproduces the latter, which is what
//! the summation-by-parts identity in [`adjoint_residual`] pins down.

use crate::{par, Error, Result};

/// Cap on dt measured in explicit-Euler stability steps.
const EXPLICIT_SUBSTEP_CAP: f64 = 1e4;

/// Central-difference step factor of the D2 face derivative.
const FACE_FD_STEP: f64 = 1e-6;

/// Uniform cell grid and time step of the 1-d solver.
///
/// Cells are [x_min + i dx, x_min + (i+1) dx) with centers at the midpoints;
/// density vectors hold one value per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FPGrid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub dt: f64,
}

impl FPGrid1D {
    pub fn new(x_min: f64, x_max: f64, nx: usize, dt: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::domain(format!("bad state range [{x_min}, {x_max}]")));
        }
        if nx < 3 {
            return Err(Error::domain(format!("at least 3 cells are required, got {nx}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        Ok(FPGrid1D { x_min, x_max, nx, dt })
    }

    /// Cell width.
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    /// All cell centers.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.center(i)).collect()
    }
}

/// Discretely normalized Gaussian density on the grid.
pub fn normalized_gaussian(grid: &FPGrid1D, center: f64, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    let mut w: Vec<f64> =
        (0..grid.nx).map(|i| (-((grid.center(i) - center) / sigma).powi(2) / 2.0).exp()).collect();
    let mass = par::sum_f64(&w) * grid.dx();
    if mass <= 0.0 || !mass.is_finite() {
        return Err(Error::domain("the Gaussian has no mass on the grid"));
    }
    for v in &mut w {
        *v /= mass;
    }
    Ok(w)
}

fn check_density(grid: &FPGrid1D, name: &str, w: &[f64]) -> Result<()> {
    if w.len() != grid.nx {
        return Err(Error::domain(format!(
            "{name} has {} cells but the grid has {}",
            w.len(),
            grid.nx
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{name} must be finite")));
    }
    Ok(())
}

/// Total mass of a density vector.
pub fn density_mass(grid: &FPGrid1D, w: &[f64]) -> f64 {
    par::sum_f64(w) * grid.dx()
}

/// Mean and variance of a density vector.
pub fn density_moments(grid: &FPGrid1D, w: &[f64]) -> (f64, f64) {
    let mass = density_mass(grid, w);
    let m1: Vec<f64> = (0..grid.nx).map(|i| grid.center(i) * w[i]).collect();
    let mean = par::sum_f64(&m1) * grid.dx() / mass;
    let m2: Vec<f64> = (0..grid.nx)
        .map(|i| {
            let d = grid.center(i) - mean;
            d * d * w[i]
        })
        .collect();
    let var = par::sum_f64(&m2) * grid.dx() / mass;
    (mean, var)
}

/// L1 distance between two density vectors.
pub fn l1_distance(grid: &FPGrid1D, a: &[f64], b: &[f64]) -> Result<f64> {
    check_density(grid, "first density", a)?;
    check_density(grid, "second density", b)?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    Ok(par::sum_f64(&diffs) * grid.dx())
}

/// Histogram density of samples on the grid cells, normalized by the full
/// sample count; the second value counts samples outside the range.
pub fn histogram_density(grid: &FPGrid1D, samples: &[f64]) -> (Vec<f64>, usize) {
    let dx = grid.dx();
    let mut counts = vec![0u64; grid.nx];
    let mut outside = 0usize;
    for &s in samples {
        if s < grid.x_min || s >= grid.x_max || !s.is_finite() {
            outside += 1;
            continue;
        }
        let bin = (((s - grid.x_min) / dx) as usize).min(grid.nx - 1);
        counts[bin] += 1;
    }
    let norm = samples.len() as f64 * dx;
    (counts.iter().map(|&c| c as f64 / norm).collect(), outside)
}

/// Probability mass per group of grid cells; `bins` must divide the cell
/// count.
pub fn coarse_masses(grid: &FPGrid1D, w: &[f64], bins: usize) -> Result<Vec<f64>> {
    check_density(grid, "density", w)?;
    if bins == 0 || grid.nx % bins != 0 {
        return Err(Error::domain(format!(
            "{bins} coarse bins do not divide {} cells",
            grid.nx
        )));
    }
    let per = grid.nx / bins;
    Ok(w.chunks(per).map(|c| par::sum_f64(c) * grid.dx()).collect())
}

/// Tridiagonal operator L with dW/dt = L W; `lower[0]` and
/// `upper[nx-1]` are zero.
struct Tridiag {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Chang-Cooper face factors (cm, cp) with flux
/// J = (B/dx) (cm W_left - cp W_right) for Peclet number w = A dx / B.
fn cc_weights(w: f64) -> (f64, f64) {
    if w.abs() < 1e-12 {
        return (1.0 + 0.5 * w, 1.0 - 0.5 * w);
    }
    let cp = w / w.exp_m1();
    (w + cp, cp)
}

fn build_operator(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    grid: &FPGrid1D,
) -> Result<Tridiag> {
    let nx = grid.nx;
    let dx = grid.dx();
    let inv_dx2 = 1.0 / (dx * dx);
    // Per interior face: b cm and b cp.
    let mut bcm = vec![0.0; nx - 1];
    let mut bcp = vec![0.0; nx - 1];
    for f in 0..nx - 1 {
        let xf = grid.x_min + (f as f64 + 1.0) * dx;
        let b = d2(xf);
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain(format!("D2 must be positive on the grid, got {b} at {xf}")));
        }
        let e = FACE_FD_STEP * (1.0 + xf.abs());
        let db = (d2(xf + e) - d2(xf - e)) / (2.0 * e);
        let a = d1(xf) - db;
        if !a.is_finite() {
            return Err(Error::domain(format!("D1 must be finite on the grid, got {a} at {xf}")));
        }
        let (cm, cp) = cc_weights(a * dx / b);
        bcm[f] = b * cm;
        bcp[f] = b * cp;
    }
    let mut op = Tridiag {
        lower: vec![0.0; nx],
        diag: vec![0.0; nx],
        upper: vec![0.0; nx],
    };
    for i in 0..nx {
        let mut diag = 0.0;
        if i > 0 {
            op.lower[i] = bcm[i - 1] * inv_dx2;
            diag -= bcp[i - 1];
        }
        if i + 1 < nx {
            op.upper[i] = bcp[i] * inv_dx2;
            diag -= bcm[i];
        }
        op.diag[i] = diag * inv_dx2;
    }
    Ok(op)
}

fn apply(op: &Tridiag, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut acc = op.diag[i] * v[i];
            if i > 0 {
                acc += op.lower[i] * v[i - 1];
            }
            if i + 1 < n {
                acc += op.upper[i] * v[i + 1];
            }
            acc
        })
        .collect()
}

fn apply_transpose(op: &Tridiag, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut acc = op.diag[i] * v[i];
            if i > 0 {
                acc += op.upper[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += op.lower[i + 1] * v[i + 1];
            }
            acc
        })
        .collect()
}

/// Solves the tridiagonal system (ml, md, mu) x = rhs in place of `x`.
fn thomas(ml: &[f64], md: &[f64], mu: &[f64], rhs: &[f64], c: &mut [f64], x: &mut [f64]) {
    let n = rhs.len();
    c[0] = mu[0] / md[0];
    x[0] = rhs[0] / md[0];
    for i in 1..n {
        let m = md[i] - ml[i] * c[i - 1];
        c[i] = mu[i] / m;
        x[i] = (rhs[i] - ml[i] * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
}

/// Advances the density `w0` to `t_end` by implicit Euler steps of the
/// grid's dt (the final step shrinks to land on `t_end` exactly).
///
/// The density stays nonnegative and its mass is checked to 1e-10 each
/// step.
pub fn fp_solve_1d(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    w0: &[f64],
    grid: &FPGrid1D,
    t_end: f64,
) -> Result<Vec<f64>> {
    check_density(grid, "initial density", w0)?;
    if w0.iter().any(|&v| v < 0.0) {
        return Err(Error::domain("initial density must be nonnegative"));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::domain(format!("t_end must be nonnegative, got {t_end}")));
    }
    let mass0 = density_mass(grid, w0);
    if (mass0 - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!(
            "initial density must integrate to one, got {mass0}"
        )));
    }
    let op = build_operator(d1, d2, grid)?;
    let max_diag = op.diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let dt_explicit = 2.0 / max_diag;
    if grid.dt > EXPLICIT_SUBSTEP_CAP * dt_explicit {
        return Err(Error::domain(format!(
            "time step {} spans {:.1} explicit-stability steps (cap {}); shrink dt or coarsen \
             the grid",
            grid.dt,
            grid.dt / dt_explicit,
            EXPLICIT_SUBSTEP_CAP
        )));
    }

    let nx = grid.nx;
    let mut w = w0.to_vec();
    let mut rhs = vec![0.0; nx];
    let mut c = vec![0.0; nx];
    let mut ml = vec![0.0; nx];
    let mut md = vec![0.0; nx];
    let mut mu = vec![0.0; nx];
    let mut remaining = t_end;
    let factor = |dt: f64, ml: &mut [f64], md: &mut [f64], mu: &mut [f64]| {
        for i in 0..nx {
            ml[i] = -dt * op.lower[i];
            md[i] = 1.0 - dt * op.diag[i];
            mu[i] = -dt * op.upper[i];
        }
    };
    factor(grid.dt, &mut ml, &mut md, &mut mu);
    while remaining > 1e-12 * (1.0 + t_end) {
        let dt = grid.dt.min(remaining);
        if dt < grid.dt {
            factor(dt, &mut ml, &mut md, &mut mu);
        }
        rhs.copy_from_slice(&w);
        thomas(&ml, &md, &mu, &rhs, &mut c, &mut w);
        let mut min = 0.0f64;
        for v in &mut w {
            min = min.min(*v);
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if min < -1e-12 {
            return Err(Error::numeric(format!("density lost positivity ({min})")));
        }
        let mass = density_mass(grid, &w);
        if (mass - mass0).abs() > 1e-10 {
            return Err(Error::numeric(format!(
                "mass drifted from {mass0} to {mass} in one step"
            )));
        }
        remaining -= dt;
    }
    Ok(w)
}

/// The pointwise backward operator -D1(x) f'(x) + D2(x) f''(x), derivatives
/// by five-point central differences.
pub fn backward_apply(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64) -> f64,
    x: f64,
) -> f64 {
    let h = 2e-3 * (1.0 + x.abs());
    let fm2 = f(x - 2.0 * h);
    let fm1 = f(x - h);
    let f0 = f(x);
    let fp1 = f(x + h);
    let fp2 = f(x + 2.0 * h);
    let df = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let ddf = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    -d1(x) * df + d2(x) * ddf
}

/// The discrete forward operator L applied to a density vector.
pub fn forward_apply_grid(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    grid: &FPGrid1D,
    w: &[f64],
) -> Result<Vec<f64>> {
    check_density(grid, "density", w)?;
    Ok(apply(&build_operator(d1, d2, grid)?, w))
}

/// The discrete adjoint L^T applied to a grid function.
///
/// In the interior this approximates +D1 f' + D2 f'', the true adjoint of
/// the forward operator (note the drift sign relative to
/// [`backward_apply`]).
pub fn adjoint_apply_grid(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    grid: &FPGrid1D,
    f: &[f64],
) -> Result<Vec<f64>> {
    check_density(grid, "grid function", f)?;
    Ok(apply_transpose(&build_operator(d1, d2, grid)?, f))
}

/// Relative gap of the summation-by-parts identity
/// <L W, f> = <W, L^T f> on the grid.
pub fn adjoint_residual(
    d1: &dyn Fn(f64) -> f64,
    d2: &dyn Fn(f64) -> f64,
    grid: &FPGrid1D,
    w: &[f64],
    f: &[f64],
) -> Result<f64> {
    check_density(grid, "density", w)?;
    check_density(grid, "grid function", f)?;
    let op = build_operator(d1, d2, grid)?;
    let lw = apply(&op, w);
    let ltf = apply_transpose(&op, f);
    let dx = grid.dx();
    let lhs_terms: Vec<f64> = lw.iter().zip(f).map(|(a, b)| a * b * dx).collect();
    let rhs_terms: Vec<f64> = w.iter().zip(&ltf).map(|(a, b)| a * b * dx).collect();
    let lhs = par::sum_f64(&lhs_terms);
    let rhs = par::sum_f64(&rhs_terms);
    Ok((lhs - rhs).abs() / (1.0 + lhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langevin::model::{ModelKind, SDEModel};
    use crate::langevin::simulate::{simulate, SimConfig};

    fn standard_normal_density(x: f64) -> f64 {
        (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn ou_relaxes_to_the_standard_gaussian() {
        let grid = FPGrid1D::new(-6.0, 6.0, 600, 1e-3).unwrap();
        let w0 = normalized_gaussian(&grid, 1.0, 3.0 * grid.dx()).unwrap();
        let d1 = |x: f64| -x;
        let d2 = |_: f64| 1.0;
        let w = fp_solve_1d(&d1, &d2, &w0, &grid, 12.0).unwrap();
        let target: Vec<f64> = grid.centers().iter().map(|&x| standard_normal_density(x)).collect();
        let dist = l1_distance(&grid, &w, &target).unwrap();
        assert!(dist < 1e-3, "L1 distance {dist}");
    }

    #[test]
    fn pure_diffusion_variance_grows_as_2t() {
        let grid = FPGrid1D::new(-40.0, 40.0, 1600, 2e-3).unwrap();
        let w0 = normalized_gaussian(&grid, 0.0, 0.25).unwrap();
        let d1 = |_: f64| 0.0;
        let d2 = |_: f64| 1.0;
        let t_end = 2.0;
        let w = fp_solve_1d(&d1, &d2, &w0, &grid, t_end).unwrap();
        let (_, var0) = density_moments(&grid, &w0);
        let (_, var) = density_moments(&grid, &w);
        let growth = var - var0;
        assert!(
            (growth - 2.0 * t_end).abs() < 0.01 * 2.0 * t_end,
            "variance grew by {growth}, want {}",
            2.0 * t_end
        );
    }

    #[test]
    fn solver_matches_the_simulated_histogram() {
        let grid = FPGrid1D::new(-6.0, 6.0, 600, 1e-3).unwrap();
        let x0 = 1.5;
        let w0 = normalized_gaussian(&grid, x0, 3.0 * grid.dx()).unwrap();
        let d1 = |x: f64| -x;
        let d2 = |_: f64| 1.0;
        let w = fp_solve_1d(&d1, &d2, &w0, &grid, 1.0).unwrap();

        let model =
            SDEModel::new(ModelKind::OrnsteinUhlenbeck { rate: 1.0, scale: 1.0 }).unwrap();
        let mut cfg = SimConfig::new(1e-3, 1000, 100_000, 314_159);
        cfg.record_every = 1000;
        let sim = simulate(&model, &[x0], &cfg).unwrap();
        let samples = sim.axis_samples(0);

        let bins = 60;
        let solver_mass = coarse_masses(&grid, &w, bins).unwrap();
        let coarse = FPGrid1D::new(grid.x_min, grid.x_max, bins, grid.dt).unwrap();
        let (hist, outside) = histogram_density(&coarse, &samples);
        assert_eq!(outside, 0);
        let hist_mass: Vec<f64> = hist.iter().map(|d| d * coarse.dx()).collect();
        let l1: f64 = solver_mass
            .iter()
            .zip(&hist_mass)
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(l1 < 0.05, "L1 distance {l1}");
    }

    #[test]
    fn mass_and_positivity_hold() {
        let grid = FPGrid1D::new(-6.0, 6.0, 400, 2e-3).unwrap();
        let w0 = normalized_gaussian(&grid, -0.5, 0.1).unwrap();
        let d1 = |x: f64| -x;
        let d2 = |x: f64| 1.0 + 0.1 * x * x;
        let w = fp_solve_1d(&d1, &d2, &w0, &grid, 3.0).unwrap();
        let mass = density_mass(&grid, &w);
        assert!((mass - density_mass(&grid, &w0)).abs() < 1e-10, "mass {mass}");
        assert!(w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn backward_apply_handles_the_trivial_cases() {
        let d1 = |x: f64| -x;
        let d2 = |_: f64| 1.0;
        let constant = |_: f64| 3.7;
        let got = backward_apply(&d1, &d2, &constant, 0.8);
        assert!(got.abs() < 1e-8, "got {got}");
        let linear = |x: f64| x;
        let got = backward_apply(&d1, &d2, &linear, 0.8);
        assert!((got - 0.8).abs() < 1e-8, "got {got}");
        let quadratic = |x: f64| x * x;
        let got = backward_apply(&d1, &d2, &quadratic, 0.8);
        // -(-x)(2x) + 1*2 at x = 0.8.
        assert!((got - (2.0 * 0.64 + 2.0)).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn adjoint_residual_is_at_roundoff() {
        let grid = FPGrid1D::new(-6.0, 6.0, 2048, 1e-3).unwrap();
        let d1 = |x: f64| -x;
        let d2 = |_: f64| 1.0;
        let mut w: Vec<f64> = grid
            .centers()
            .iter()
            .map(|&x| {
                0.6 * (-(x + 1.0) * (x + 1.0) / 1.28).exp()
                    + 0.4 * (-(x - 1.5) * (x - 1.5) / 0.5).exp()
            })
            .collect();
        let mass = density_mass(&grid, &w);
        for v in &mut w {
            *v /= mass;
        }
        let f: Vec<f64> = grid
            .centers()
            .iter()
            .map(|&x| (0.3 * x).sin() + 0.2 * x * x * (-x * x / 8.0).exp())
            .collect();
        let resid = adjoint_residual(&d1, &d2, &grid, &w, &f).unwrap();
        assert!(resid < 1e-6, "residual {resid}");
    }

    #[test]
    fn discrete_adjoint_reverses_the_drift_sign() {
        let grid = FPGrid1D::new(-6.0, 6.0, 2048, 1e-3).unwrap();
        let d1 = |x: f64| -x;
        let neg_d1 = |x: f64| x;
        let d2 = |_: f64| 1.0;
        let fc = |x: f64| x.sin() * (-x * x / 18.0).exp();
        let f: Vec<f64> = grid.centers().iter().map(|&x| fc(x)).collect();
        let ltf = adjoint_apply_grid(&d1, &d2, &grid, &f).unwrap();
        let mut adjoint_gap = 0.0f64;
        let mut printed_gap = 0.0f64;
        for (i, &x) in grid.centers().iter().enumerate() {
            if x.abs() > 4.5 {
                continue;
            }
            adjoint_gap = adjoint_gap.max((ltf[i] - backward_apply(&neg_d1, &d2, &fc, x)).abs());
            printed_gap = printed_gap.max((ltf[i] - backward_apply(&d1, &d2, &fc, x)).abs());
        }
        // The transpose matches the drift-negated pointwise operator to
        // discretization error and is far from the -D1 f' form.
        assert!(adjoint_gap < 5e-3, "adjoint gap {adjoint_gap}");
        assert!(printed_gap > 0.5, "printed-form gap {printed_gap}");
    }

    #[test]
    fn oversized_steps_are_a_configuration_error() {
        let grid = FPGrid1D::new(-6.0, 6.0, 600, 10.0).unwrap();
        let w0 = normalized_gaussian(&grid, 0.0, 0.5).unwrap();
        let d1 = |x: f64| -x;
        let d2 = |_: f64| 1.0;
        let err = fp_solve_1d(&d1, &d2, &w0, &grid, 20.0).unwrap_err();
        assert!(err.to_string().contains("explicit-stability"), "{err}");
    }

    #[test]
    fn bad_densities_are_rejected() {
        let grid = FPGrid1D::new(-6.0, 6.0, 100, 1e-3).unwrap();
        let d1 = |x: f64| -x;
        let d2 = |_: f64| 1.0;
        let zero = vec![0.0; 100];
        assert!(fp_solve_1d(&d1, &d2, &zero, &grid, 1.0).is_err());
        let mut unnormalized = normalized_gaussian(&grid, 0.0, 0.5).unwrap();
        for v in &mut unnormalized {
            *v *= 2.0;
        }
        assert!(fp_solve_1d(&d1, &d2, &unnormalized, &grid, 1.0).is_err());
        let mut negative = normalized_gaussian(&grid, 0.0, 0.5).unwrap();
        negative[3] = -negative[3];
        assert!(fp_solve_1d(&d1, &d2, &negative, &grid, 1.0).is_err());
        let bad_d2 = |_: f64| 0.0;
        let w0 = normalized_gaussian(&grid, 0.0, 0.5).unwrap();
        assert!(fp_solve_1d(&d1, &bad_d2, &w0, &grid, 1.0).is_err());
        assert!(FPGrid1D::new(-6.0, 6.0, 2, 1e-3).is_err());
        assert!(FPGrid1D::new(6.0, -6.0, 100, 1e-3).is_err());
    }
}
