//! Test systems: the Ikeda and Hénon maps and the Lorenz flow.
//!
//! All generators are deterministic in `(config, seed)`. Noise is applied to
//! the `x` observable only, either fed back into the state each step
//! ([`NoiseMode::Iterative`]) or added to the finished series
//! ([`NoiseMode::Superimposed`]).

mod noise;
pub mod ode;

pub use noise::{gaussian_noise, GaussianStream, Noise, NoiseMode};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// States beyond this magnitude count as divergence.
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkedaConfig {
    pub p: f64,
    pub b: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub n: usize,
    pub noise: Noise,
    pub seed: u64,
    /// Noise-free iterations discarded before recording.
    pub transient: usize,
    /// Initial state `(re, im)`.
    pub z0: [f64; 2],
}

impl Default for IkedaConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            b: 0.9,
            kappa: 0.4,
            alpha: 6.0,
            n: 2000,
            noise: Noise::default(),
            seed: 0,
            transient: 1000,
            z0: [0.0, 0.0],
        }
    }
}

impl IkedaConfig {
    /// One step of `z -> p + B z exp(i (kappa - alpha / (1 + |z|^2)))`.
    pub fn step(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let phase = self.kappa - self.alpha / (1.0 + x * x + y * y);
        let (s, c) = phase.sin_cos();
        [self.p + self.b * (x * c - y * s), self.b * (x * s + y * c)]
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(self.noise.sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise sigma must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_bounded(step: usize, magnitude: f64) -> Result<()> {
    if magnitude.is_finite() && magnitude <= DIVERGENCE_LIMIT {
        Ok(())
    } else {
        Err(Error::Diverged { step, magnitude })
    }
}

fn superimpose(x: &mut [f64], noise: &Noise, seed: u64) {
    if noise.mode == NoiseMode::Superimposed && !noise.is_zero() {
        let r = gaussian_noise(x.len(), noise.sigma, seed);
        for (v, r) in x.iter_mut().zip(r) {
            *v += r;
        }
    }
}

/// Iterative-mode noise source; yields zeros otherwise.
struct Feedback {
    stream: Option<(GaussianStream, f64)>,
}

impl Feedback {
    fn new(noise: &Noise, seed: u64) -> Self {
        let stream = (noise.mode == NoiseMode::Iterative && !noise.is_zero())
            .then(|| (GaussianStream::new(seed), noise.sigma));
        Self { stream }
    }

    fn perturb(&mut self, v: f64) -> f64 {
        match &mut self.stream {
            Some((g, sigma)) => v + *sigma * g.standard(),
            None => v,
        }
    }
}

/// Ikeda map series with columns `x`, `y`.
pub fn gen_ikeda(cfg: &IkedaConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut z = cfg.z0;
    for t in 0..cfg.transient {
        z = cfg.step(z);
        check_bounded(t, z[0].hypot(z[1]))?;
    }
    let mut feedback = Feedback::new(&cfg.noise, cfg.seed);
    let mut xs = Vec::with_capacity(cfg.n);
    let mut ys = Vec::with_capacity(cfg.n);
    for t in 0..cfg.n {
        z = cfg.step(z);
        z[0] = feedback.perturb(z[0]);
        check_bounded(cfg.transient + t, z[0].hypot(z[1]))?;
        xs.push(z[0]);
        ys.push(z[1]);
    }
    superimpose(&mut xs, &cfg.noise, cfg.seed);
    series(vec![("x", xs), ("y", ys)])
}

fn series(cols: Vec<(&str, Vec<f64>)>) -> Result<Dataset> {
    let (names, columns) = cols.into_iter().map(|(n, c)| (n.to_string(), c)).unzip();
    Dataset::new(names, columns)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HenonConfig {
    pub n: usize,
    pub noise: Noise,
    pub seed: u64,
    pub transient: usize,
}

impl Default for HenonConfig {
    fn default() -> Self {
        Self {
            n: 3000,
            noise: Noise::default(),
            seed: 0,
            transient: 1000,
        }
    }
}

/// Delay form of the Hénon map, `x_t = 1 - 1.4 x_{t-1}^2 + 0.3 x_{t-2}`,
/// started from `x_{-1} = x_{-2} = 0`. Single column `x`.
pub fn gen_henon(cfg: &HenonConfig) -> Result<Dataset> {
    if cfg.n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let step = |x1: f64, x2: f64| 1.0 - 1.4 * x1 * x1 + 0.3 * x2;
    let (mut x1, mut x2) = (0.0, 0.0);
    for t in 0..cfg.transient {
        (x1, x2) = (step(x1, x2), x1);
        check_bounded(t, x1.abs())?;
    }
    let mut feedback = Feedback::new(&cfg.noise, cfg.seed);
    let mut xs = Vec::with_capacity(cfg.n);
    for t in 0..cfg.n {
        let next = feedback.perturb(step(x1, x2));
        (x1, x2) = (next, x1);
        check_bounded(cfg.transient + t, next.abs())?;
        xs.push(next);
    }
    superimpose(&mut xs, &cfg.noise, cfg.seed);
    series(vec![("x", xs)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzConfig {
    pub r: f64,
    pub b: f64,
    pub sigma: f64,
    /// Sampling interval of the emitted series.
    pub dt_out: f64,
    pub n: usize,
    pub noise: Noise,
    pub seed: u64,
    /// Integration time discarded before recording.
    pub transient_time: f64,
    pub initial: [f64; 3],
    pub tolerance: f64,
}

impl Default for LorenzConfig {
    fn default() -> Self {
        Self {
            r: 45.92,
            b: 4.0,
            sigma: 16.0,
            dt_out: 0.1,
            n: 2000,
            noise: Noise::superimposed(0.0),
            seed: 0,
            transient_time: 20.0,
            initial: [1.0, 1.0, 1.0],
            tolerance: 1e-8,
        }
    }
}

impl LorenzConfig {
    pub fn derivative(&self, [x, y, z]: &[f64; 3]) -> [f64; 3] {
        [
            self.sigma * (y - x),
            self.r * x - y - x * z,
            x * y - self.b * z,
        ]
    }
}

/// Lorenz flow sampled every `dt_out`, columns `x`, `y`, `z`. Each output
/// interval is a fresh adaptive Dormand-Prince integration started from the
/// previous sample.
pub fn gen_lorenz(cfg: &LorenzConfig) -> Result<Dataset> {
    if cfg.n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    if !(cfg.dt_out > 0.0) || !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidConfig(
            "dt_out and tolerance must be positive".into(),
        ));
    }
    let f = |s: &[f64; 3]| cfg.derivative(s);
    let mut state = cfg.initial;
    let mut h = cfg.dt_out;
    let transient_steps = (cfg.transient_time / cfg.dt_out).round() as usize;
    let mut t = 0.0;
    for k in 0..transient_steps {
        state = ode::dopri5(&f, state, t, t + cfg.dt_out, cfg.tolerance, &mut h)?;
        t += cfg.dt_out;
        check_bounded(k, state[0].abs().max(state[1].abs()).max(state[2].abs()))?;
    }
    let mut feedback = Feedback::new(&cfg.noise, cfg.seed);
    let mut cols = [
        Vec::with_capacity(cfg.n),
        Vec::with_capacity(cfg.n),
        Vec::with_capacity(cfg.n),
    ];
    for k in 0..cfg.n {
        state = ode::dopri5(&f, state, t, t + cfg.dt_out, cfg.tolerance, &mut h)?;
        t += cfg.dt_out;
        state[0] = feedback.perturb(state[0]);
        check_bounded(
            transient_steps + k,
            state[0].abs().max(state[1].abs()).max(state[2].abs()),
        )?;
        for (c, v) in cols.iter_mut().zip(state) {
            c.push(v);
        }
    }
    let [mut xs, ys, zs] = cols;
    superimpose(&mut xs, &cfg.noise, cfg.seed);
    series(vec![("x", xs), ("y", ys), ("z", zs)])
}
