//! Stratonovich path ensembles with counter-keyed noise streams.
//!
//! The integrator is Heun's predictor-corrector, which converges to the
//! Stratonovich reading of multiplicative noise and therefore to the drift
//! table D1 = h + g'g.  Each path owns a ChaCha stream keyed by (seed, path
//! index), so the ensemble is bitwise reproducible for any worker count and
//! any scheduling.  An Euler-Maruyama toggle exists for diagnostics; it
//! integrates the Ito reading and deliberately does not match that table.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::model::{SDEModel, MAX_DIM};
use crate::{par, Error, Result};

/// Paths per work unit of the parallel ensemble loop.
const PATH_BLOCK: usize = 512;

/// Lags of the transition ladder, in steps.
pub const LADDER_LAGS: [usize; 4] = [1, 2, 4, 8];

/// Integration controls of one ensemble run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Time step.
    pub dt: f64,
    /// Steps integrated; the run covers [0, steps * dt].
    pub steps: usize,
    /// Ensemble size.
    pub paths: usize,
    /// Seed of the per-path noise streams.
    pub seed: u64,
    /// Integrate the Ito reading (Euler-Maruyama) instead of Stratonovich.
    pub ito: bool,
    /// Emit a moment row every this many steps; the initial and final steps
    /// are always recorded.
    pub record_every: usize,
}

impl SimConfig {
    /// Heun integration recording every step.
    pub fn new(dt: f64, steps: usize, paths: usize, seed: u64) -> Self {
        SimConfig { dt, steps, paths, seed, ito: false, record_every: 1 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::domain(format!("time step must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::domain("at least one step is required"));
        }
        if self.paths == 0 {
            return Err(Error::domain("at least one path is required"));
        }
        if self.record_every == 0 {
            return Err(Error::domain("record_every must be at least 1"));
        }
        Ok(())
    }
}

/// Ensemble moments of one axis at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: f64,
    pub axis: usize,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// A finished ensemble run: the moment stream and the final states.
#[derive(Debug, Clone)]
pub struct Simulation {
    dim: usize,
    dt: f64,
    paths: usize,
    /// Moment rows ordered by time, then axis.
    pub moments: Vec<MomentRow>,
    final_states: Vec<f64>,
}

impl Simulation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Final states, row-major paths x dim.
    pub fn final_states(&self) -> &[f64] {
        &self.final_states
    }

    /// Final states of one axis, in path order.
    pub fn axis_samples(&self, axis: usize) -> Vec<f64> {
        assert!(axis < self.dim, "axis out of range");
        (0..self.paths).map(|p| self.final_states[p * self.dim + axis]).collect()
    }

    /// Moment rows of one axis, in time order.
    pub fn axis_moments(&self, axis: usize) -> Vec<MomentRow> {
        self.moments.iter().copied().filter(|r| r.axis == axis).collect()
    }
}

struct Scratch {
    h0: [f64; MAX_DIM],
    h1: [f64; MAX_DIM],
    g0: [f64; MAX_DIM * MAX_DIM],
    g1: [f64; MAX_DIM * MAX_DIM],
    pred: [f64; MAX_DIM],
    dw: [f64; MAX_DIM],
}

impl Scratch {
    fn new() -> Self {
        Scratch {
            h0: [0.0; MAX_DIM],
            h1: [0.0; MAX_DIM],
            g0: [0.0; MAX_DIM * MAX_DIM],
            g1: [0.0; MAX_DIM * MAX_DIM],
            pred: [0.0; MAX_DIM],
            dw: [0.0; MAX_DIM],
        }
    }
}

/// One integration step in place; `s.dw` holds the Gaussian increments of
/// variance 2 dt.  Returns false when the state left the finite range.
fn step_state(
    model: &SDEModel,
    dim: usize,
    dt: f64,
    ito: bool,
    x: &mut [f64; MAX_DIM],
    s: &mut Scratch,
) -> bool {
    model.drift_into(&x[..dim], &mut s.h0);
    model.noise_into(&x[..dim], &mut s.g0);
    if ito {
        for i in 0..dim {
            let mut kick = 0.0;
            for j in 0..dim {
                kick += s.g0[i * dim + j] * s.dw[j];
            }
            x[i] += s.h0[i] * dt + kick;
        }
    } else {
        for i in 0..dim {
            let mut kick = 0.0;
            for j in 0..dim {
                kick += s.g0[i * dim + j] * s.dw[j];
            }
            s.pred[i] = x[i] + s.h0[i] * dt + kick;
        }
        model.drift_into(&s.pred[..dim], &mut s.h1);
        model.noise_into(&s.pred[..dim], &mut s.g1);
        for i in 0..dim {
            let mut kick = 0.0;
            for j in 0..dim {
                kick += 0.5 * (s.g0[i * dim + j] + s.g1[i * dim + j]) * s.dw[j];
            }
            x[i] += 0.5 * (s.h0[i] + s.h1[i]) * dt + kick;
        }
    }
    x[..dim].iter().all(|v| v.is_finite())
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn draw_increments(rng: &mut ChaCha8Rng, dim: usize, amp: f64, dw: &mut [f64; MAX_DIM]) {
    for slot in dw.iter_mut().take(dim) {
        let n: f64 = rng.sample(StandardNormal);
        *slot = amp * n;
    }
}

/// Integrates `paths` trajectories from `x0` and streams their first four
/// moments.
pub fn simulate(model: &SDEModel, x0: &[f64], cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let dim = model.dim();
    if x0.len() != dim {
        return Err(Error::domain(format!(
            "initial state has {} coordinates but the model is {dim}-dimensional",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("initial state must be finite"));
    }

    let mut record_steps: Vec<usize> = (0..=cfg.steps).step_by(cfg.record_every).collect();
    if *record_steps.last().expect("never empty") != cfg.steps {
        record_steps.push(cfg.steps);
    }
    let n_rec = record_steps.len();
    let amp = (2.0 * cfg.dt).sqrt();
    let blocks = cfg.paths.div_ceil(PATH_BLOCK);

    struct Block {
        sums: Vec<f64>,
        finals: Vec<f64>,
    }

    let results = par::map_indexed(blocks, |b| -> Result<Block> {
        let lo = b * PATH_BLOCK;
        let hi = ((b + 1) * PATH_BLOCK).min(cfg.paths);
        let mut sums = vec![0.0; n_rec * dim * 4];
        let mut finals = Vec::with_capacity((hi - lo) * dim);
        let mut s = Scratch::new();
        for p in lo..hi {
            let mut rng = path_rng(cfg.seed, p);
            let mut x = [0.0; MAX_DIM];
            x[..dim].copy_from_slice(x0);
            let mut rec = 0;
            for step in 0..=cfg.steps {
                if step > 0 {
                    draw_increments(&mut rng, dim, amp, &mut s.dw);
                    if !step_state(model, dim, cfg.dt, cfg.ito, &mut x, &mut s) {
                        return Err(Error::numeric(format!(
                            "path {p} left the finite range at step {step}"
                        )));
                    }
                }
                if rec < n_rec && record_steps[rec] == step {
                    for (a, &v) in x[..dim].iter().enumerate() {
                        let base = (rec * dim + a) * 4;
                        let v2 = v * v;
                        sums[base] += v;
                        sums[base + 1] += v2;
                        sums[base + 2] += v2 * v;
                        sums[base + 3] += v2 * v2;
                    }
                    rec += 1;
                }
            }
            finals.extend_from_slice(&x[..dim]);
        }
        Ok(Block { sums, finals })
    });

    let mut sums = vec![0.0; n_rec * dim * 4];
    let mut finals = Vec::with_capacity(cfg.paths * dim);
    for res in results {
        let block = res?;
        for (acc, v) in sums.iter_mut().zip(&block.sums) {
            *acc += v;
        }
        finals.extend_from_slice(&block.finals);
    }

    let n = cfg.paths as f64;
    let mut moments = Vec::with_capacity(n_rec * dim);
    for (r, &step) in record_steps.iter().enumerate() {
        for a in 0..dim {
            let base = (r * dim + a) * 4;
            moments.push(MomentRow {
                t: step as f64 * cfg.dt,
                axis: a,
                m1: sums[base] / n,
                m2: sums[base + 1] / n,
                m3: sums[base + 2] / n,
                m4: sums[base + 3] / n,
            });
        }
    }

    Ok(Simulation { dim, dt: cfg.dt, paths: cfg.paths, moments, final_states: finals })
}

/// Sampling controls for transition records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    /// Time step.
    pub dt: f64,
    /// Steps integrated before the segment marked stationary begins.
    pub burn_in: usize,
    /// Base points recorded per path.
    pub base_points: usize,
    /// Steps from one base point to the next; must exceed the largest lag.
    pub stride: usize,
    /// Ensemble size.
    pub paths: usize,
    /// Seed of the per-path noise streams.
    pub seed: u64,
    /// Integrate the Ito reading instead of Stratonovich.
    pub ito: bool,
}

/// Transition records (x(t), x(t + k dt)) for the ladder lags, taken from
/// the segment marked stationary.
#[derive(Debug, Clone)]
pub struct TransitionEnsemble {
    dt: f64,
    stationary_from: f64,
    base: Vec<f64>,
    images: Vec<[f64; 4]>,
}

impl TransitionEnsemble {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time where the segment marked stationary begins.
    pub fn stationary_from(&self) -> f64 {
        self.stationary_from
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Lag times of the ladder.
    pub fn taus(&self) -> [f64; 4] {
        LADDER_LAGS.map(|k| k as f64 * self.dt)
    }

    pub(super) fn records(&self) -> (&[f64], &[[f64; 4]]) {
        (&self.base, &self.images)
    }
}

/// Collects transition records from a scalar model.
///
/// Each path burns in, then alternates between recording a base state, the
/// states after the ladder lags, and striding to the next base.
pub fn sample_transitions(
    model: &SDEModel,
    x0: f64,
    cfg: &EnsembleConfig,
) -> Result<TransitionEnsemble> {
    if model.dim() != 1 {
        return Err(Error::domain("transition sampling covers scalar models only"));
    }
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {}", cfg.dt)));
    }
    if cfg.paths == 0 || cfg.base_points == 0 {
        return Err(Error::domain("paths and base_points must be at least 1"));
    }
    let max_lag = *LADDER_LAGS.last().expect("ladder is fixed");
    if cfg.stride <= max_lag {
        return Err(Error::domain(format!(
            "stride must exceed the largest ladder lag {max_lag}, got {}",
            cfg.stride
        )));
    }
    if !x0.is_finite() {
        return Err(Error::domain("initial state must be finite"));
    }

    let amp = (2.0 * cfg.dt).sqrt();
    let blocks = cfg.paths.div_ceil(PATH_BLOCK);

    struct Block {
        base: Vec<f64>,
        images: Vec<[f64; 4]>,
    }

    let results = par::map_indexed(blocks, |b| -> Result<Block> {
        let lo = b * PATH_BLOCK;
        let hi = ((b + 1) * PATH_BLOCK).min(cfg.paths);
        let mut base = Vec::with_capacity((hi - lo) * cfg.base_points);
        let mut images = Vec::with_capacity((hi - lo) * cfg.base_points);
        let mut s = Scratch::new();
        for p in lo..hi {
            let mut rng = path_rng(cfg.seed, p);
            let mut x = [0.0; MAX_DIM];
            x[0] = x0;
            let mut global_step = 0usize;
            let advance = |x: &mut [f64; MAX_DIM],
                               s: &mut Scratch,
                               rng: &mut ChaCha8Rng,
                               global_step: &mut usize|
             -> Result<()> {
                draw_increments(rng, 1, amp, &mut s.dw);
                *global_step += 1;
                if !step_state(model, 1, cfg.dt, cfg.ito, x, s) {
                    return Err(Error::numeric(format!(
                        "path {p} left the finite range at step {global_step}"
                    )));
                }
                Ok(())
            };
            for _ in 0..cfg.burn_in {
                advance(&mut x, &mut s, &mut rng, &mut global_step)?;
            }
            for _ in 0..cfg.base_points {
                base.push(x[0]);
                let mut img = [0.0; 4];
                for step in 1..=cfg.stride {
                    advance(&mut x, &mut s, &mut rng, &mut global_step)?;
                    if let Some(slot) = LADDER_LAGS.iter().position(|&lag| lag == step) {
                        img[slot] = x[0];
                    }
                }
                images.push(img);
            }
        }
        Ok(Block { base, images })
    });

    let mut base = Vec::with_capacity(cfg.paths * cfg.base_points);
    let mut images = Vec::with_capacity(cfg.paths * cfg.base_points);
    for res in results {
        let block = res?;
        base.extend_from_slice(&block.base);
        images.extend_from_slice(&block.images);
    }

    Ok(TransitionEnsemble {
        dt: cfg.dt,
        stationary_from: cfg.burn_in as f64 * cfg.dt,
        base,
        images,
    })
}
