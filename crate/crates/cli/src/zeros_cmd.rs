//! Ordinate scans feeding the on-disk zero cache.

use std::path::PathBuf;

use clap::Args;
use nzlab_core::resolvent::averaged_phi_with_err;
use nzlab_core::zeros::{extend_zero_cache, find_zeros, Route, ZeroRecord};
use nzlab_core::zeta::{critical_line_value, JProfile, DEFAULT_T_MAX};

use crate::{fmt_f64, moduli_for_rank, CliError};

/// Arguments of the `zeros` subcommand.
#[derive(Debug, Args)]
pub struct ZerosArgs {
    /// Lattice rank, 1 or 2.
    #[arg(long, default_value_t = 1)]
    pub rank: u8,
    /// Ordinate window "lo:hi".
    #[arg(long = "gamma-range")]
    pub gamma_range: String,
    /// Scan step along the ordinate.
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    /// Bisection tolerance on each ordinate.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Moduli quadrature levels used at rank 2.
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Tail truncation target of the theta integrands; the critical-line
    /// values decay fast along gamma, so the default sits near roundoff.
    #[arg(long, default_value_t = 1e-13)]
    pub eps: f64,
    /// Zero cache CSV to create or extend.
    #[arg(long, default_value = "zeros.csv")]
    pub cache: PathBuf,
}

pub fn run(args: &ZerosArgs) -> Result<(), CliError> {
    if !(args.step > 0.0 && args.step.is_finite()) {
        return Err(CliError::Usage(format!("step must be positive, got {}", args.step)));
    }
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::Usage(format!("tol must be positive, got {}", args.tol)));
    }
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(CliError::Usage(format!("eps must be positive, got {}", args.eps)));
    }
    let (lo, hi) = parse_range(&args.gamma_range)?;
    let grid = moduli_for_rank(args.rank, args.levels)?;
    let profile = JProfile::build(args.rank, &grid, args.eps, DEFAULT_T_MAX)?;
    let direct = find_zeros(&profile, lo, hi, args.step, args.tol)?;

    let mut records: Vec<ZeroRecord> = Vec::with_capacity(2 * direct.len());
    for rec in &direct {
        let direct_residual = critical_line_value(&profile, rec.gamma)?.abs();
        let mut line = format!(
            "zero rank={} gamma={} direct_residual={}",
            rec.n,
            fmt_f64(rec.gamma),
            fmt_f64(direct_residual),
        );
        records.push(rec.clone());
        if args.rank == 2 {
            let (phi, phi_err) = averaged_phi_with_err(rec.gamma, &grid)?;
            line.push_str(&format!(
                " phi_residual={} phi_err={}",
                fmt_f64(phi.abs()),
                fmt_f64(phi_err),
            ));
            let mut phi_rec = rec.clone();
            phi_rec.route = Route::Phi;
            records.push(phi_rec);
        }
        println!("{line}");
    }

    let merged = extend_zero_cache(&args.cache, &records)?;
    println!(
        "cache {} holds {} records after adding {}",
        args.cache.display(),
        merged.len(),
        records.len(),
    );
    Ok(())
}

fn parse_range(spec: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("gamma-range wants \"lo:hi\", got {spec:?}"));
    let fields: Vec<&str> = spec.split(':').collect();
    if fields.len() != 2 {
        return Err(bad());
    }
    let lo: f64 = fields[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = fields[1].trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(bad());
    }
    Ok((lo, hi))
}
