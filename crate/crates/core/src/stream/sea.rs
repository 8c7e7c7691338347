//! SEA concepts: three uniform features on `[0, 10]`, the first two relevant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{scheduled_concept, validate_noise, validate_schedule, ClassId, DriftSpec, Instance};
use crate::error::{Error, Result};

/// Thresholds of SEA concepts 1 to 4.
const THETAS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];

/// Threshold of a SEA concept (1-based id).
pub fn sea_theta(concept: u8) -> Result<f64> {
    match concept {
        1..=4 => Ok(THETAS[usize::from(concept) - 1]),
        _ => Err(Error::Config(format!("SEA concept {concept} not in 1..=4"))),
    }
}

/// Class 1 iff `f1 + f2 <= theta`; the third feature is noise.
pub fn sea_label(features: &[f64], theta: f64) -> ClassId {
    usize::from(features[0] + features[1] <= theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeaConfig {
    pub concept_schedule: Vec<DriftSpec>,
    /// Concept used when the schedule is empty.
    #[serde(default = "default_concept")]
    pub initial_concept: u8,
    pub noise_rate: f64,
    pub length: u64,
    pub seed: u64,
}

fn default_concept() -> u8 {
    1
}

impl SeaConfig {
    pub fn stationary(concept: u8, noise_rate: f64, length: u64, seed: u64) -> Self {
        Self {
            concept_schedule: Vec::new(),
            initial_concept: concept,
            noise_rate,
            length,
            seed,
        }
    }

    /// Single abrupt switch between the two most different concepts
    /// (theta 7 to 9.5) at the midpoint.
    pub fn abrupt(length: u64, noise_rate: f64, seed: u64) -> Self {
        Self {
            concept_schedule: vec![DriftSpec::abrupt(length / 2, 3, 4)],
            initial_concept: 3,
            noise_rate,
            length,
            seed,
        }
    }

    /// The abrupt midpoint switch with gradual drifts a quarter of the
    /// stream before and after it.
    pub fn mixed(length: u64, gradual_width: u64, noise_rate: f64, seed: u64) -> Self {
        let quarter = length / 4;
        Self {
            concept_schedule: vec![
                DriftSpec::gradual(quarter, gradual_width, 1, 3),
                DriftSpec::abrupt(2 * quarter, 3, 4),
                DriftSpec::gradual(3 * quarter, gradual_width, 4, 2),
            ],
            initial_concept: 1,
            noise_rate,
            length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::Config("stream length must be positive".into()));
        }
        validate_noise(self.noise_rate)?;
        validate_schedule(&self.concept_schedule, self.length)?;
        sea_theta(self.initial_concept)?;
        for spec in &self.concept_schedule {
            sea_theta(spec.from_concept)?;
            sea_theta(spec.to_concept)?;
        }
        Ok(())
    }

    pub fn generator(&self) -> Result<SeaGenerator> {
        SeaGenerator::new(self.clone())
    }
}

#[derive(Debug, Clone)]
pub struct SeaGenerator {
    config: SeaConfig,
    rng: ChaCha8Rng,
    next_index: u64,
    last_concept: u8,
}

impl SeaGenerator {
    pub fn new(config: SeaConfig) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let last_concept = config
            .concept_schedule
            .first()
            .map_or(config.initial_concept, |d| d.from_concept);
        Ok(Self {
            config,
            rng,
            next_index: 1,
            last_concept,
        })
    }

    /// Concept that generated the most recent instance.
    pub fn last_concept(&self) -> u8 {
        self.last_concept
    }
}

impl Iterator for SeaGenerator {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        if self.next_index > self.config.length {
            return None;
        }
        let index = self.next_index;
        self.next_index += 1;
        let concept = scheduled_concept(
            self.config.initial_concept,
            &self.config.concept_schedule,
            index,
            &mut self.rng,
        );
        self.last_concept = concept;
        let features: Vec<f64> = (0..3).map(|_| self.rng.random_range(0.0..10.0)).collect();
        let theta = THETAS[usize::from(concept) - 1];
        let mut label = sea_label(&features, theta);
        if self.rng.random::<f64>() < self.config.noise_rate {
            label = 1 - label;
        }
        Some(Instance::labeled(index, features, label))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.config.length + 1 - self.next_index) as usize;
        (left, Some(left))
    }
}
