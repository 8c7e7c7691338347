//! Rotating hyperplane: the decision boundary drifts a little every sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate_noise, ClassId, Instance};
use crate::error::{Error, Result};

/// Class 1 iff `sum(w_i x_i) > sum(w_i) / 2`.
pub fn hyperplane_label(weights: &[f64], features: &[f64]) -> ClassId {
    let dot: f64 = weights.iter().zip(features).map(|(w, x)| w * x).sum();
    let total: f64 = weights.iter().sum();
    usize::from(dot > total / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneConfig {
    pub n_features: usize,
    /// Per-sample step of every weight along its drift direction.
    pub mag_change: f64,
    /// Per-sample probability that a weight reverses its drift direction.
    pub sigma: f64,
    pub noise_rate: f64,
    pub length: u64,
    pub seed: u64,
}

impl HyperplaneConfig {
    pub const DEFAULT_MAG_CHANGE: f64 = 0.001;
    pub const DEFAULT_SIGMA: f64 = 0.1;

    pub fn gradual(n_features: usize, noise_rate: f64, length: u64, seed: u64) -> Self {
        Self {
            n_features,
            mag_change: Self::DEFAULT_MAG_CHANGE,
            sigma: Self::DEFAULT_SIGMA,
            noise_rate,
            length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features < 2 {
            return Err(Error::Config("hyperplane needs at least 2 features".into()));
        }
        if !(self.mag_change >= 0.0) {
            return Err(Error::Config("mag_change must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::Config("sigma must be a probability".into()));
        }
        if self.length == 0 {
            return Err(Error::Config("stream length must be positive".into()));
        }
        validate_noise(self.noise_rate)
    }

    pub fn generator(&self) -> Result<HyperplaneGenerator> {
        HyperplaneGenerator::new(self.clone())
    }
}

#[derive(Debug, Clone)]
pub struct HyperplaneGenerator {
    config: HyperplaneConfig,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
    directions: Vec<f64>,
    next_index: u64,
}

impl HyperplaneGenerator {
    pub fn new(config: HyperplaneConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let weights = (0..config.n_features).map(|_| rng.random()).collect();
        let directions = vec![1.0; config.n_features];
        Ok(Self {
            config,
            rng,
            weights,
            directions,
            next_index: 1,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Iterator for HyperplaneGenerator {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        if self.next_index > self.config.length {
            return None;
        }
        let index = self.next_index;
        self.next_index += 1;
        let features: Vec<f64> = (0..self.config.n_features)
            .map(|_| self.rng.random())
            .collect();
        let mut label = hyperplane_label(&self.weights, &features);
        if self.rng.random::<f64>() < self.config.noise_rate {
            label = 1 - label;
        }
        for (w, dir) in self.weights.iter_mut().zip(self.directions.iter_mut()) {
            *w += *dir * self.config.mag_change;
            if self.rng.random::<f64>() < self.config.sigma {
                *dir = -*dir;
            }
        }
        Some(Instance::labeled(index, features, label))
    }
}
