//! Langevin simulation with moment, coefficient, and density tables.

use std::path::{Path, PathBuf};

use clap::Args;
use nzlab_core::langevin::{
    fp_solve_1d, km_estimate, km_theoretical, load_config, normalized_gaussian,
    sample_transitions, save_config, simulate, EnsembleConfig, FPGrid1D, LangevinConfig,
    ModelKind, SDEModel,
};

use crate::{fmt_f64, CliError};

const KM_BINS: usize = 12;
const KM_BASE_POINTS: usize = 25;
const KM_STRIDE: usize = 10;
const DENSITY_NX: usize = 400;
const DENSITY_DT: f64 = 1e-3;

/// Arguments of the `langevin` subcommand.
#[derive(Debug, Args)]
pub struct LangevinArgs {
    /// Model id: ou, multiplicative, brownian, or isotropic.
    #[arg(long, default_value = "ou")]
    pub model: String,
    /// JSON run configuration; overrides the model id and numeric flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ensemble size.
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    /// Steps per path.
    #[arg(long, default_value_t = 800)]
    pub steps: usize,
    /// Time step.
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    /// Initial coordinate, broadcast across axes; defaults per model.
    #[arg(long)]
    pub x0: Option<f64>,
    /// Seed of the counter-keyed path generators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the Ito update instead of the Stratonovich one.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub ito: bool,
    /// Moment recording cadence in steps.
    #[arg(long = "record-every", default_value_t = 10)]
    pub record_every: usize,
    /// Output prefix of the written tables.
    #[arg(long, default_value = "langevin")]
    pub out: PathBuf,
}

pub fn run(args: &LangevinArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => load_config(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => config_from_flags(args)?,
    };
    if config.paths == 0 {
        return Err(CliError::Usage("paths must be at least 1".into()));
    }
    if config.steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(CliError::Usage(format!("dt must be positive, got {}", config.dt)));
    }
    if config.record_every == 0 {
        return Err(CliError::Usage("record-every must be at least 1".into()));
    }
    let model = SDEModel::new(config.model).map_err(|e| CliError::Usage(e.to_string()))?;
    if config.x0.len() != model.dim() {
        return Err(CliError::Usage(format!(
            "x0 has {} coordinates but the model has dimension {}",
            config.x0.len(),
            model.dim(),
        )));
    }

    println!(
        "model={} dim={} paths={} steps={} dt={} seed={} ito={}",
        config.model.name(),
        model.dim(),
        config.paths,
        config.steps,
        fmt_f64(config.dt),
        config.seed,
        config.ito,
    );

    let sim = simulate(&model, &config.x0, &config.sim_config())?;

    save_config(&prefixed(&args.out, "config.json"), &config)?;
    report_written(&prefixed(&args.out, "config.json"));
    write_moments(&prefixed(&args.out, "moments.csv"), &sim.moments)?;
    report_written(&prefixed(&args.out, "moments.csv"));

    if model.dim() == 1 {
        write_km(&prefixed(&args.out, "km.csv"), &model, &config)?;
        report_written(&prefixed(&args.out, "km.csv"));
        match density_grid(&config.model, config.x0[0]) {
            Some(grid) => {
                write_density(&prefixed(&args.out, "density.csv"), &model, &grid, &config)?;
                report_written(&prefixed(&args.out, "density.csv"));
            }
            None => println!("density: SKIP (needs a positive start for this model)"),
        }
    } else {
        println!("km: SKIP (scalar models only)");
        println!("density: SKIP (scalar models only)");
    }

    equipartition_lines(&config, &sim.moments, model.dim())
}

fn config_from_flags(args: &LangevinArgs) -> Result<LangevinConfig, CliError> {
    let (model, default_x0) = match args.model.as_str() {
        "ou" => (ModelKind::OrnsteinUhlenbeck { rate: 1.0, scale: 1.0 }, 0.0),
        "multiplicative" => (ModelKind::Multiplicative { scale: 1.0 }, 1.0),
        "brownian" => (ModelKind::BrownianVelocity { alpha: 1.0, mass: 1.0, gamma_t: 1.0 }, 0.0),
        "isotropic" => (ModelKind::IsotropicRelaxation { dim: 2, rate: 1.0, scale: 1.0 }, 0.0),
        other => {
            return Err(CliError::Usage(format!(
                "unknown model {other:?}; pick ou, multiplicative, brownian, or isotropic"
            )))
        }
    };
    let dim = SDEModel::new(model).map_err(|e| CliError::Usage(e.to_string()))?.dim();
    Ok(LangevinConfig {
        model,
        x0: vec![args.x0.unwrap_or(default_x0); dim],
        dt: args.dt,
        steps: args.steps,
        paths: args.paths,
        seed: args.seed,
        ito: args.ito,
        record_every: args.record_every,
    })
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}-{suffix}", prefix.display()))
}

fn report_written(path: &Path) {
    println!("wrote {}", path.display());
}

fn write_moments(
    path: &Path,
    rows: &[nzlab_core::langevin::MomentRow],
) -> Result<(), CliError> {
    let mut body = String::from("t,axis,m1,m2,m3,m4\n");
    for r in rows {
        body.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(r.t),
            r.axis,
            fmt_f64(r.m1),
            fmt_f64(r.m2),
            fmt_f64(r.m3),
            fmt_f64(r.m4),
        ));
    }
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Estimates the first four conditional-moment coefficients on a state grid.
fn write_km(path: &Path, model: &SDEModel, config: &LangevinConfig) -> Result<(), CliError> {
    let ens_cfg = EnsembleConfig {
        dt: config.dt,
        burn_in: config.steps / 2,
        base_points: KM_BASE_POINTS,
        stride: KM_STRIDE,
        paths: config.paths,
        seed: config.seed,
        ito: config.ito,
    };
    let ens = sample_transitions(model, config.x0[0], &ens_cfg)?;
    let ladder = ens.taus();
    let mut body = String::from("order,center,value,error,masked\n");
    for order in 1..=4u32 {
        let est = km_estimate(&ens, order, &ladder, KM_BINS)?;
        for i in 0..est.centers.len() {
            body.push_str(&format!(
                "{},{},{},{},{}\n",
                est.order,
                fmt_f64(est.centers[i]),
                fmt_f64(est.values[i]),
                fmt_f64(est.errors[i]),
                est.masked[i],
            ));
        }
    }
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Picks a solver box holding the bulk of the law started at `x0`.
fn density_grid(kind: &ModelKind, x0: f64) -> Option<FPGrid1D> {
    match kind {
        ModelKind::Multiplicative { .. } => {
            if x0 > 0.0 {
                FPGrid1D::new(x0 / 4.0, x0 * 4.0, DENSITY_NX, DENSITY_DT).ok()
            } else {
                None
            }
        }
        _ => {
            let lo = (-6.0_f64).min(x0 - 4.0);
            let hi = 6.0_f64.max(x0 + 4.0);
            FPGrid1D::new(lo, hi, DENSITY_NX, DENSITY_DT).ok()
        }
    }
}

/// Propagates the matching scalar density to the simulation horizon.
fn write_density(
    path: &Path,
    model: &SDEModel,
    grid: &FPGrid1D,
    config: &LangevinConfig,
) -> Result<(), CliError> {
    let d1 = |x: f64| km_theoretical(model, &[x]).map(|c| c.drift[0]).unwrap_or(f64::NAN);
    let d2 = |x: f64| km_theoretical(model, &[x]).map(|c| c.diffusion[0]).unwrap_or(f64::NAN);
    let w0 = normalized_gaussian(grid, config.x0[0], 3.0 * grid.dx())?;
    let t_end = config.steps as f64 * config.dt;
    let w = fp_solve_1d(&d1, &d2, &w0, grid, t_end)?;
    let mut body = String::from("x,w\n");
    for (i, wi) in w.iter().enumerate() {
        body.push_str(&format!("{},{}\n", fmt_f64(grid.center(i)), fmt_f64(*wi)));
    }
    std::fs::write(path, body)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Stationary second moment of the catalogue entries that have one.
fn equipartition_target(kind: &ModelKind) -> Option<f64> {
    match *kind {
        ModelKind::OrnsteinUhlenbeck { rate, scale } => {
            if rate > 0.0 {
                Some(scale * scale / rate)
            } else {
                None
            }
        }
        ModelKind::BrownianVelocity { mass, gamma_t, .. } => Some(gamma_t / mass),
        ModelKind::IsotropicRelaxation { rate, scale, .. } => {
            if rate > 0.0 {
                Some(scale * scale / rate)
            } else {
                None
            }
        }
        ModelKind::Multiplicative { .. } => None,
    }
}

/// Compares the final second moment per axis against the stationary target.
fn equipartition_lines(
    config: &LangevinConfig,
    moments: &[nzlab_core::langevin::MomentRow],
    dim: usize,
) -> Result<(), CliError> {
    let target = match equipartition_target(&config.model) {
        Some(t) => t,
        None => {
            println!("equipartition: SKIP (no stationary second-moment target)");
            return Ok(());
        }
    };
    let mut failures = Vec::new();
    for axis in 0..dim {
        let last = moments
            .iter()
            .rev()
            .find(|r| r.axis == axis)
            .ok_or_else(|| CliError::Numeric("no recorded moments".into()))?;
        let se = ((last.m4 - last.m2 * last.m2).max(0.0) / config.paths as f64).sqrt();
        let gap = (last.m2 - target).abs();
        let limit = 3.0 * se;
        let verdict = if gap <= limit { "PASS" } else { "FAIL" };
        println!(
            "equipartition axis={axis}: {verdict} m2={} target={} gap={} limit={}",
            fmt_f64(last.m2),
            fmt_f64(target),
            fmt_f64(gap),
            fmt_f64(limit),
        );
        if gap > limit {
            failures.push(axis);
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "equipartition gate failed on {} of {dim} axes",
            failures.len(),
        )))
    }
}
