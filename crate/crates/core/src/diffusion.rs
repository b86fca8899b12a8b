//! Overdamped Langevin (Smoluchowski) dynamics in a three-well potential and
//! its coarse-graining onto equal-width bins.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{ObservedPath, SimError};

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("invalid diffusion config: {0}")]
    Config(String),
    #[error(transparent)]
    Path(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    /// Drag coefficient.
    pub alpha: f64,
    /// Noise scale.
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    /// Keep every `stride`-th point.
    pub stride: usize,
    pub lower: f64,
    pub upper: f64,
    pub bins: usize,
    pub x0: f64,
    pub seed: u64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            beta: 1.65,
            dt: 0.02,
            steps: 500_000,
            stride: 50,
            lower: -5.0,
            upper: 5.0,
            bins: 30,
            x0: 0.0,
            seed: 0,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<(), DiffusionError> {
        let fail = |msg: &str| Err(DiffusionError::Config(msg.to_string()));
        if !(self.dt > 0.0) {
            return fail("dt must be positive");
        }
        if self.stride == 0 {
            return fail("stride must be at least 1");
        }
        if self.bins < 2 {
            return fail("need at least two bins");
        }
        if !(self.lower < self.upper) {
            return fail("domain lower bound must be below the upper bound");
        }
        if !(self.alpha > 0.0) || !(self.beta >= 0.0) {
            return fail("alpha must be positive and beta nonnegative");
        }
        if self.steps < self.stride {
            return fail("steps must cover at least one stride");
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.bins as f64
    }

    /// Time between retained observations.
    pub fn observation_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }
}

/// `U(x) = (0.5x⁶ − 15x⁴ + 119x² + 28x + 50) / 200`
pub fn potential(x: f64) -> f64 {
    let x2 = x * x;
    (((0.5 * x2 - 15.0) * x2 + 119.0) * x2 + 28.0 * x + 50.0) / 200.0
}

/// `U′(x) = (3x⁵ − 60x³ + 238x + 28) / 200`
pub fn grad_potential(x: f64) -> f64 {
    let x2 = x * x;
    (((3.0 * x2 - 60.0) * x2 + 238.0) * x + 28.0) / 200.0
}

/// Euler–Maruyama path of `dx = −U′(x)/α dt + β/α dW`, `steps + 1` points.
pub fn euler_maruyama<R: Rng + ?Sized>(cfg: &DiffusionConfig, x0: f64, rng: &mut R) -> Result<Vec<f64>, DiffusionError> {
    cfg.validate()?;
    let drift_scale = cfg.dt / cfg.alpha;
    let noise_scale = cfg.beta / cfg.alpha * cfg.dt.sqrt();
    let mut traj = Vec::with_capacity(cfg.steps + 1);
    let mut x = x0;
    traj.push(x);
    for _ in 0..cfg.steps {
        let z: f64 = rng.sample(StandardNormal);
        x = x - grad_potential(x) * drift_scale + noise_scale * z;
        traj.push(x);
    }
    Ok(traj)
}

/// Trajectory from `cfg.x0` driven by the `cfg.seed` stream.
pub fn simulate_trajectory(cfg: &DiffusionConfig) -> Result<Vec<f64>, DiffusionError> {
    euler_maruyama(cfg, cfg.x0, &mut crate::rng::stream(cfg.seed, "euler_maruyama"))
}

/// Bin assignments with the number of points clamped into an edge bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarsePath {
    pub path: ObservedPath,
    pub clamped: usize,
}

/// 0-based bin of `x`, clamped into the domain; the flag marks a clamp.
pub fn bin_index(x: f64, cfg: &DiffusionConfig) -> (usize, bool) {
    let raw = ((x - cfg.lower) / cfg.bin_width()).floor();
    let outside = x < cfg.lower || x > cfg.upper;
    let idx = raw.clamp(0.0, (cfg.bins - 1) as f64) as usize;
    (idx, outside)
}

/// Subsamples every `stride`-th point and bins it.
pub fn coarse_grain(traj: &[f64], cfg: &DiffusionConfig) -> Result<CoarsePath, DiffusionError> {
    cfg.validate()?;
    let mut clamped = 0;
    let states: Vec<usize> = traj
        .iter()
        .step_by(cfg.stride)
        .map(|&x| {
            let (b, out) = bin_index(x, cfg);
            clamped += out as usize;
            b
        })
        .collect();
    let path = ObservedPath::new(states, cfg.bins, cfg.observation_interval())?;
    Ok(CoarsePath { path, clamped })
}
