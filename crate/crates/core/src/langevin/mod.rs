//! Langevin dynamics: ensemble simulation of a fixed model catalogue,
//! Kramers-Moyal coefficient estimation from sampled transitions, and a
//! conservative 1-d Fokker-Planck solver.
//!
//! Conventions, fixed once for the whole module:
//!
//! * Noise is normalized so that `<Gamma_i(t) Gamma_j(t')> =
//!   2 delta_ij delta(t - t')`.  Each Gaussian increment therefore has
//!   variance `2 dt` and the integrators scale unit draws by
//!   `sqrt(2 dt)`.
//! * Equations `dxi_i/dt = h_i + sum_j g_ij Gamma_j` are read in the
//!   Stratonovich sense and integrated with a Heun predictor-corrector
//!   step.  The first Kramers-Moyal coefficient then carries the
//!   noise-induced drift, `D1_i = h_i + sum_kj g_kj d(g_ij)/dx_k`, and
//!   the second is `D2 = g g^T`.  The Ito toggle switches to an
//!   Euler-Maruyama step whose drift coefficient is plain `h`; it is
//!   provided for comparison and does not reproduce that coefficient
//!   table.
//! * The backward operator is exposed verbatim in its classical display
//!   form `-D1 f' + D2 f''`.  The adjoint of the conservative forward
//!   operator carries the opposite drift sign; see the solver docs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lattice::{gram_from_tau, minimal_norm};
use crate::moduli::ModuliGrid;
use crate::{Error, Result};

mod fp1d;
mod km;
mod model;
mod simulate;

pub use fp1d::{
    adjoint_apply_grid, adjoint_residual, backward_apply, coarse_masses, density_mass,
    density_moments, forward_apply_grid, fp_solve_1d, histogram_density, l1_distance,
    normalized_gaussian, FPGrid1D,
};
pub use km::{
    km_estimate, km_estimate_in_range, km_round_trip_gap, km_theoretical, reconstruct_langevin,
    KMEstimate, KmCoefficients, LangevinCoefficients,
};
pub use model::{ModelKind, SDEModel, MAX_DIM};
pub use simulate::{
    sample_transitions, simulate, EnsembleConfig, MomentRow, SimConfig, Simulation,
    TransitionEnsemble, LADDER_LAGS,
};

fn default_record_every() -> usize {
    1
}

/// A complete simulation run description, loadable from JSON.
///
/// The model field picks one entry of the fixed catalogue by its
/// snake_case tag, for example
/// `{"kind": "ornstein_uhlenbeck", "rate": 1.0, "scale": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub model: ModelKind,
    pub x0: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub ito: bool,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl LangevinConfig {
    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.dt, self.steps, self.paths, self.seed);
        cfg.ito = self.ito;
        cfg.record_every = self.record_every;
        cfg
    }

    /// Builds the model and runs the ensemble this config describes.
    pub fn run(&self) -> Result<Simulation> {
        let model = SDEModel::new(self.model)?;
        simulate(&model, &self.x0, &self.sim_config())
    }
}

/// Reads a [`LangevinConfig`] from a JSON file.
pub fn load_config(path: &Path) -> Result<LangevinConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::domain(format!("bad langevin config {}: {e}", path.display())))
}

/// Writes a [`LangevinConfig`] as pretty JSON.
pub fn save_config(path: &Path, cfg: &LangevinConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(cfg)
        .map_err(|e| Error::numeric(format!("config serialization failed: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes moment rows as CSV with columns t, axis, m1, m2, m3, m4.
pub fn save_moments_csv(path: &Path, rows: &[MomentRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Relaxation diagnostics averaged over a moduli grid.
///
/// All means are weighted by the node weights, normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedFamilyReport {
    /// Nodes visited (the coarsest grid level).
    pub nodes: usize,
    /// Weighted mean relaxation rate over the family.
    pub mean_rate: f64,
    /// Weighted mean of the measured stationary second moments.
    pub mean_second_moment: f64,
    /// Weighted mean of the analytic targets 1/rate.
    pub mean_target: f64,
    /// Largest per-node |measured - target| in units of its standard error.
    pub worst_gap_se: f64,
}

/// Runs the relaxation diagnostic at every node of the grid's coarsest
/// level and averages the results with the node weights.
///
/// No closed equation is available for averaging the dynamics over the
/// whole lattice family, so this report takes an operational reading:
/// each point tau of the moduli grid contributes a one-dimensional
/// relaxation whose rate is the minimal vector norm of the Gram matrix
/// at tau, the same stationary-variance diagnostic runs at every node,
/// and the weighted node results are combined.  It is a summary of the
/// family, not the evaluation of a stated formula.
pub fn averaged_family_report(
    grid: &ModuliGrid,
    paths: usize,
    seed: u64,
) -> Result<AveragedFamilyReport> {
    let nodes = grid.coarsest();
    if nodes.is_empty() {
        return Err(Error::domain("the grid has no nodes to average over"));
    }
    let mut total_weight = 0.0;
    let mut mean_rate = 0.0;
    let mut mean_second_moment = 0.0;
    let mut mean_target = 0.0;
    let mut worst_gap_se = 0.0f64;
    for (i, node) in nodes.iter().enumerate() {
        let rate = minimal_norm(&gram_from_tau(&node.tau)?)?;
        let target = 1.0 / rate;
        let model = SDEModel::new(ModelKind::OrnsteinUhlenbeck { rate, scale: 1.0 })?;
        let steps = 120;
        let mut cfg = SimConfig::new(0.05 / rate, steps, paths, seed.wrapping_add(i as u64 * 0x9e37_79b9));
        cfg.record_every = steps;
        let sim = simulate(&model, &[0.0], &cfg)?;
        let last = sim
            .axis_moments(0)
            .into_iter()
            .last()
            .ok_or_else(|| Error::numeric("the run recorded no moments"))?;
        let se = ((last.m4 - last.m2 * last.m2).max(0.0) / paths as f64).sqrt();
        if se > 0.0 {
            worst_gap_se = worst_gap_se.max((last.m2 - target).abs() / se);
        }
        total_weight += node.weight;
        mean_rate += node.weight * rate;
        mean_second_moment += node.weight * last.m2;
        mean_target += node.weight * target;
    }
    Ok(AveragedFamilyReport {
        nodes: nodes.len(),
        mean_rate: mean_rate / total_weight,
        mean_second_moment: mean_second_moment / total_weight,
        mean_target: mean_target / total_weight,
        worst_gap_se,
    })
}
