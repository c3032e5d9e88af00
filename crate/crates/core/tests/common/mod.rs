#![allow(dead_code)]

use nlnoise::generators::GaussianStream;
use nlnoise::{
    build_lag_problem, gen_ikeda, Dataset, EmbeddingSpec, IkedaConfig, Noise, RegressionProblem,
    VarRef,
};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Uniform(ChaCha20Rng);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha20Rng::seed_from_u64(seed))
    }

    pub fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            v.swap(i, self.below(i + 1));
        }
    }
}

pub fn problem(y: Vec<f64>, x: Vec<f64>, d: usize) -> RegressionProblem {
    let names = (0..d).map(|k| format!("x{k}")).collect();
    RegressionProblem::new("y", y, names, x).unwrap()
}

/// `y = sin(3 x0) + noise`, other columns uniform.
pub fn random_problem(n: usize, d: usize, noise: f64, seed: u64) -> RegressionProblem {
    let mut u = Uniform::new(seed);
    let mut g = GaussianStream::new(seed ^ 0x5eed);
    let x: Vec<f64> = (0..n * d).map(|_| u.next() * 2.0 - 1.0).collect();
    let y = (0..n)
        .map(|i| {
            let s = if d > 0 { (3.0 * x[i * d]).sin() } else { 0.0 };
            s + noise * g.standard()
        })
        .collect();
    problem(y, x, d)
}

/// Pure Gaussian noise target against one irrelevant uniform regressor.
pub fn noise_problem(n: usize, sigma: f64, seed: u64) -> RegressionProblem {
    let mut u = Uniform::new(seed);
    let mut g = GaussianStream::new(seed.wrapping_add(1));
    let x = (0..n).map(|_| u.next()).collect();
    let y = (0..n).map(|_| sigma * g.standard()).collect();
    problem(y, x, 1)
}

pub fn ikeda(sigma: f64, seed: u64) -> Dataset {
    gen_ikeda(&IkedaConfig {
        noise: Noise::iterative(sigma),
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// `x_t` against `{x_{t-1}, y_{t-1}}`.
pub fn ikeda_xy(series: &Dataset) -> RegressionProblem {
    let spec = EmbeddingSpec::new("x", vec![1]).with_extra(VarRef::new("y", 1));
    build_lag_problem(series, &spec).unwrap()
}

/// `x_t` against `{x_{t-1}}`.
pub fn ikeda_x(series: &Dataset) -> RegressionProblem {
    build_lag_problem(series, &EmbeddingSpec::new("x", vec![1])).unwrap()
}
