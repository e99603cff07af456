//! Batch front end for the nzlab numerical laboratory.
//!
//! Four subcommands cover the pipeline: `zeta` evaluates completed zeta
//! values on a grid in the s plane, `zeros` scans an ordinate window and
//! maintains the on-disk zero cache, `verify` runs the invariant suites
//! and emits a JSON verdict, and `langevin` simulates a catalogue model
//! and tabulates its statistics.
//!
//! Every run is deterministic: fixed seeds drive counter-keyed generators,
//! reductions have fixed shapes, and all floating-point fields are written
//! with seventeen significant digits, so identical configurations produce
//! byte-identical outputs regardless of thread count.  `NZL_THREADS` caps
//! the worker pool.

mod langevin_cmd;
mod verify_cmd;
mod zeros_cmd;
mod zeta_cmd;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nzlab_core::moduli::{build_grid, ModuliGrid};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

/// Top-level command-line surface.
#[derive(Debug, Parser)]
#[command(
    name = "nzlab",
    version,
    about = "lattice zeta values, critical-line zeros, and diffusion statistics",
    disable_help_subcommand = true
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate completed zeta values on a grid in the s plane.
    Zeta(zeta_cmd::ZetaArgs),
    /// Scan an ordinate window for zeros and extend a cache file.
    Zeros(zeros_cmd::ZerosArgs),
    /// Run the invariant suites and write a JSON report.
    Verify(verify_cmd::VerifyArgs),
    /// Simulate a Langevin model and tabulate its statistics.
    Langevin(langevin_cmd::LangevinArgs),
}

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or malformed input files.
    Usage(String),
    /// A numeric invariant failed or a computation rejected its state.
    Numeric(String),
    /// The file system got in the way.
    Io(String),
}

impl From<nzlab_core::Error> for CliError {
    fn from(e: nzlab_core::Error) -> Self {
        match e {
            nzlab_core::Error::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

/// Formats a float with seventeen significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds the moduli grid matching a rank choice.
pub fn moduli_for_rank(rank: u8, levels: u32) -> Result<ModuliGrid, CliError> {
    match rank {
        1 => Ok(ModuliGrid::rank1()),
        2 => Ok(build_grid(levels, "gauss4")?),
        other => Err(CliError::Usage(format!("rank must be 1 or 2, got {other}"))),
    }
}

/// Writes a finished buffer to a file, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("cannot write stdout: {e}"))),
    }
}

/// Applies the NZL_THREADS cap before any parallel region starts.
fn thread_cap() -> Result<(), CliError> {
    let raw = match std::env::var("NZL_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Usage(format!("NZL_THREADS is not readable: {e}"))),
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("NZL_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(CliError::Usage("NZL_THREADS must be at least 1".into()));
    }
    nzlab_core::par::limit_threads(n)?;
    Ok(())
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let result = thread_cap().and_then(|()| match &config.command {
        Command::Zeta(args) => zeta_cmd::run(args),
        Command::Zeros(args) => zeros_cmd::run(args),
        Command::Verify(args) => verify_cmd::run(args),
        Command::Langevin(args) => langevin_cmd::run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
