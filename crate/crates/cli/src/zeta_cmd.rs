//! Grid evaluation of completed zeta values.

use std::path::PathBuf;

use clap::Args;
use num_complex::Complex64;
use nzlab_core::zeta::{zeta_integral, JProfile, DEFAULT_T_MAX};

use crate::{emit, fmt_f64, moduli_for_rank, CliError};

const CSV_HEADER: &str = "s_re,s_im,value_re,value_im,err\n";

/// Arguments of the `zeta` subcommand.
#[derive(Debug, Args)]
pub struct ZetaArgs {
    /// Lattice rank, 1 or 2.
    #[arg(long, default_value_t = 1)]
    pub rank: u8,
    /// Evaluation grid "re0:re1:n_re,im0:im1:n_im"; a zero count empties an axis.
    #[arg(long = "s-grid")]
    pub s_grid: String,
    /// Moduli quadrature levels used at rank 2.
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Tail truncation target of the theta integrands.
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ZetaArgs) -> Result<(), CliError> {
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(CliError::Usage(format!("eps must be positive, got {}", args.eps)));
    }
    let points = parse_grid(&args.s_grid)?;
    let mut csv = String::from(CSV_HEADER);
    if !points.is_empty() {
        let grid = moduli_for_rank(args.rank, args.levels)?;
        let profile = JProfile::build(args.rank, &grid, args.eps, DEFAULT_T_MAX)?;
        for s in &points {
            let z = zeta_integral(*s, &profile)?;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(s.re),
                fmt_f64(s.im),
                fmt_f64(z.value.re),
                fmt_f64(z.value.im),
                fmt_f64(z.err),
            ));
        }
    }
    emit(args.out.as_deref(), csv.as_bytes())
}

/// Expands "a:b:n,c:d:m" into the row-major product of two inclusive ranges.
fn parse_grid(spec: &str) -> Result<Vec<Complex64>, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "s-grid wants \"re0:re1:n,im0:im1:m\", got {spec:?}"
        )));
    }
    let re = parse_axis(parts[0])?;
    let im = parse_axis(parts[1])?;
    let mut out = Vec::with_capacity(re.len() * im.len());
    for r in &re {
        for i in &im {
            out.push(Complex64::new(*r, *i));
        }
    }
    Ok(out)
}

fn parse_axis(axis: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("axis wants \"start:stop:count\", got {axis:?}"));
    let fields: Vec<&str> = axis.split(':').collect();
    if fields.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = fields[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = fields[1].trim().parse().map_err(|_| bad())?;
    let n: usize = fields[2].trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    })
}
