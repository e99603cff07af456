//! The fixed model catalogue for Langevin simulation.
//!
//! Every entry is a stochastic differential equation
//! dx_i = h_i(x) dt + sum_j g_ij(x) dGamma_j under the noise normalization
//! <Gamma_i(t) Gamma_j(t')> = 2 delta_ij delta(t - t'), so one time step of
//! size dt carries independent Gaussian increments of variance 2 dt.  The
//! catalogue is closed on purpose: each model ships exact spatial
//! derivatives of its noise matrix, which the closed-form Kramers-Moyal
//! coefficients need, and run configurations name models by identifier
//! instead of parsing expressions.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported state dimension.
pub const MAX_DIM: usize = 4;

/// Catalogue identifiers with their parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// dx = -rate x dt + scale dGamma; rate 0 is pure diffusion.
    OrnsteinUhlenbeck { rate: f64, scale: f64 },
    /// dx = scale x dGamma, the noise-induced drift example.
    Multiplicative { scale: f64 },
    /// dv = -(alpha/mass) v dt + (sqrt(alpha gamma_t)/mass) dGamma.
    ///
    /// Velocity of a particle of mass `mass` under friction `alpha` in a
    /// bath; `gamma_t` is the Boltzmann constant times the temperature, and
    /// the stationary second moment is gamma_t / mass.
    BrownianVelocity { alpha: f64, mass: f64, gamma_t: f64 },
    /// dx_i = -rate x_i dt + scale dGamma_i in `dim` coordinates.
    IsotropicRelaxation { dim: usize, rate: f64, scale: f64 },
}

impl ModelKind {
    /// Short identifier used in reports and file names.
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::OrnsteinUhlenbeck { .. } => "ornstein_uhlenbeck",
            ModelKind::Multiplicative { .. } => "multiplicative",
            ModelKind::BrownianVelocity { .. } => "brownian_velocity",
            ModelKind::IsotropicRelaxation { .. } => "isotropic_relaxation",
        }
    }
}

/// A validated member of the catalogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SDEModel {
    kind: ModelKind,
}

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("model parameter {name} must be finite, got {v}")))
    }
}

fn require_nonnegative(name: &str, v: f64) -> Result<()> {
    require_finite(name, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("model parameter {name} must be nonnegative, got {v}")))
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    require_finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("model parameter {name} must be positive, got {v}")))
    }
}

impl SDEModel {
    pub fn new(kind: ModelKind) -> Result<Self> {
        match kind {
            ModelKind::OrnsteinUhlenbeck { rate, scale } => {
                require_nonnegative("rate", rate)?;
                require_nonnegative("scale", scale)?;
            }
            ModelKind::Multiplicative { scale } => {
                require_finite("scale", scale)?;
            }
            ModelKind::BrownianVelocity { alpha, mass, gamma_t } => {
                require_positive("alpha", alpha)?;
                require_positive("mass", mass)?;
                require_nonnegative("gamma_t", gamma_t)?;
            }
            ModelKind::IsotropicRelaxation { dim, rate, scale } => {
                if dim == 0 || dim > MAX_DIM {
                    return Err(Error::domain(format!(
                        "isotropic relaxation supports 1..={MAX_DIM} coordinates, got {dim}"
                    )));
                }
                require_nonnegative("rate", rate)?;
                require_nonnegative("scale", scale)?;
            }
        }
        Ok(SDEModel { kind })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::IsotropicRelaxation { dim, .. } => dim,
            _ => 1,
        }
    }

    fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "state has {} coordinates but the model is {}-dimensional",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("state coordinates must be finite"));
        }
        Ok(())
    }

    /// Drift vector h(x).
    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let mut out = [0.0; MAX_DIM];
        self.drift_into(x, &mut out);
        Ok(out[..self.dim()].to_vec())
    }

    /// Noise matrix g(x), row-major.
    pub fn noise_matrix(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let mut out = [0.0; MAX_DIM * MAX_DIM];
        self.noise_into(x, &mut out);
        Ok(out[..self.dim() * self.dim()].to_vec())
    }

    /// Exact partial derivative of the noise matrix along coordinate `k`,
    /// row-major.
    pub fn noise_jacobian(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let d = self.dim();
        if k >= d {
            return Err(Error::domain(format!("coordinate index {k} out of range for dimension {d}")));
        }
        let mut out = vec![0.0; d * d];
        if let ModelKind::Multiplicative { scale } = self.kind {
            if k == 0 {
                out[0] = scale;
            }
        }
        Ok(out)
    }

    pub(super) fn drift_into(&self, x: &[f64], out: &mut [f64; MAX_DIM]) {
        match self.kind {
            ModelKind::OrnsteinUhlenbeck { rate, .. } => out[0] = -rate * x[0],
            ModelKind::Multiplicative { .. } => out[0] = 0.0,
            ModelKind::BrownianVelocity { alpha, mass, .. } => out[0] = -(alpha / mass) * x[0],
            ModelKind::IsotropicRelaxation { dim, rate, .. } => {
                for i in 0..dim {
                    out[i] = -rate * x[i];
                }
            }
        }
    }

    pub(super) fn noise_into(&self, x: &[f64], out: &mut [f64; MAX_DIM * MAX_DIM]) {
        match self.kind {
            ModelKind::OrnsteinUhlenbeck { scale, .. } => out[0] = scale,
            ModelKind::Multiplicative { scale } => out[0] = scale * x[0],
            ModelKind::BrownianVelocity { alpha, mass, gamma_t } => {
                out[0] = (alpha * gamma_t).sqrt() / mass;
            }
            ModelKind::IsotropicRelaxation { dim, scale, .. } => {
                out[..dim * dim].fill(0.0);
                for i in 0..dim {
                    out[i * dim + i] = scale;
                }
            }
        }
    }
}
