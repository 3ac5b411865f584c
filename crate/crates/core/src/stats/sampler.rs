use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// How the phases x_i = πΩ_i n mod 2π are modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TorusMode {
    /// Σ x_i ≡ πn (mod 2π) because Σ Ω_i = 1: the last coordinate is fixed by the
    /// others and a random parity bit.
    Constrained,
    /// All B coordinates independent.
    Full,
}

/// Uniform points on [0, 2π)^B. Sample i is drawn from its own ChaCha stream
/// keyed by (seed, i), so results do not depend on how work is scheduled.
#[derive(Clone, Debug)]
pub struct TorusSampler {
    dim: usize,
    seed: u64,
    counter: u64,
    mode: TorusMode,
    base: ChaCha8Rng,
}

impl TorusSampler {
    pub fn new(dim: usize, seed: u64, mode: TorusMode) -> Self {
        Self {
            dim,
            seed,
            counter: 0,
            mode,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> TorusMode {
        self.mode
    }

    /// Index of the next sample to be drawn.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }

    pub fn fill_point(&self, rng: &mut ChaCha8Rng, x: &mut [f64]) {
        let tau = std::f64::consts::TAU;
        match self.mode {
            TorusMode::Full => {
                for xi in x.iter_mut() {
                    *xi = rng.gen::<f64>() * tau;
                }
            }
            TorusMode::Constrained => {
                let Some((last, rest)) = x.split_last_mut() else {
                    return;
                };
                let mut sum = 0.0;
                for xi in rest.iter_mut() {
                    *xi = rng.gen::<f64>() * tau;
                    sum += *xi;
                }
                let parity = if rng.gen::<bool>() { std::f64::consts::PI } else { 0.0 };
                *last = (parity - sum).rem_euclid(tau);
            }
        }
    }

    pub fn point(&self, index: u64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.fill_point(&mut self.stream(index), &mut x);
        x
    }

    /// Evaluate `f(x, rng)` on the next `count` samples, in sample order.
    pub fn map<F>(&mut self, count: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut ChaCha8Rng) -> f64 + Sync,
    {
        let start = self.counter;
        let this = &*self;
        let out = (0..count)
            .into_par_iter()
            .with_min_len(1024)
            .map_init(
                || vec![0.0; this.dim],
                |x, i| {
                    let mut rng = this.stream(start + i as u64);
                    this.fill_point(&mut rng, x);
                    f(x, &mut rng)
                },
            )
            .collect();
        self.counter += count as u64;
        out
    }

    /// Claim the next `count` sample indices, returning the first.
    pub fn reserve(&mut self, count: usize) -> u64 {
        let start = self.counter;
        self.counter += count as u64;
        start
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: dim });
        }
        Ok(())
    }
}
