//! Stream data model and sources.
//!
//! Every source yields [`Instance`]s with 1-based, strictly increasing
//! indexes and holds O(1) instances in memory. Synthetic sources are fully
//! determined by their configuration and seed.

mod csv;
mod hyperplane;
mod sea;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{load_csv_stream, CsvStream};
pub use self::hyperplane::{hyperplane_label, HyperplaneConfig, HyperplaneGenerator};
pub use self::sea::{sea_label, sea_theta, SeaConfig, SeaGenerator};

/// Class identifier. Labels are dense indexes into the schema's class list.
pub type ClassId = usize;

/// One sample of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// 1-based position in the stream.
    pub index: u64,
    pub features: Vec<f64>,
    pub label: Option<ClassId>,
}

impl Instance {
    pub fn labeled(index: u64, features: Vec<f64>, label: ClassId) -> Self {
        Self {
            index,
            features,
            label: Some(label),
        }
    }

    pub fn require_label(&self) -> Result<ClassId> {
        self.label.ok_or(Error::Unlabeled { index: self.index })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSchema {
    pub n_features: usize,
    /// Raw label values as they appear in the source. An instance label is
    /// the position of its raw value in this list.
    pub class_labels: Vec<i64>,
    #[serde(default)]
    pub feature_names: Option<Vec<String>>,
}

impl StreamSchema {
    pub fn new(n_features: usize, class_labels: Vec<i64>) -> Result<Self> {
        let schema = Self {
            n_features,
            class_labels,
            feature_names: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Schema of a binary stream with labels `{0, 1}`.
    pub fn binary(n_features: usize) -> Self {
        Self {
            n_features,
            class_labels: vec![0, 1],
            feature_names: None,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::Config("schema needs at least one feature".into()));
        }
        if self.class_labels.len() < 2 {
            return Err(Error::Config("schema needs at least two classes".into()));
        }
        let mut sorted = self.class_labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.class_labels.len() {
            return Err(Error::Config("class labels must be distinct".into()));
        }
        if let Some(names) = &self.feature_names {
            if names.len() != self.n_features {
                return Err(Error::Config(format!(
                    "{} feature names for {} features",
                    names.len(),
                    self.n_features
                )));
            }
        }
        Ok(())
    }

    pub fn class_index(&self, raw: i64) -> Option<ClassId> {
        self.class_labels.iter().position(|&c| c == raw)
    }
}

/// A concept change centred at `position`.
///
/// `width == 1` is an abrupt switch; larger widths blend the two concepts
/// with a sigmoid over roughly `width` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub position: u64,
    pub width: u64,
    pub from_concept: u8,
    pub to_concept: u8,
}

impl DriftSpec {
    pub fn abrupt(position: u64, from_concept: u8, to_concept: u8) -> Self {
        Self {
            position,
            width: 1,
            from_concept,
            to_concept,
        }
    }

    pub fn gradual(position: u64, width: u64, from_concept: u8, to_concept: u8) -> Self {
        Self {
            position,
            width,
            from_concept,
            to_concept,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("drift width must be at least 1".into()));
        }
        if self.position == 0 {
            return Err(Error::Config("drift position must be positive".into()));
        }
        Ok(())
    }

    /// Probability that sample `index` is drawn from `to_concept`.
    pub fn transition_probability(&self, index: u64) -> f64 {
        if self.width <= 1 {
            return if index >= self.position { 1.0 } else { 0.0 };
        }
        let offset = index as f64 - self.position as f64;
        1.0 / (1.0 + (-4.0 * offset / self.width as f64).exp())
    }
}

/// Picks the concept active at `index` under `spec`.
///
/// Exactly one uniform draw is consumed per call regardless of the width,
/// so generators stay aligned across configurations.
pub fn gradual_mix<R: Rng + ?Sized>(spec: &DriftSpec, index: u64, rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    if u < spec.transition_probability(index) {
        spec.to_concept
    } else {
        spec.from_concept
    }
}

/// Resolves the active concept under a whole drift schedule.
pub(crate) fn scheduled_concept<R: Rng + ?Sized>(
    initial: u8,
    schedule: &[DriftSpec],
    index: u64,
    rng: &mut R,
) -> u8 {
    let mut concept = schedule.first().map_or(initial, |d| d.from_concept);
    for spec in schedule {
        if gradual_mix(spec, index, rng) == spec.to_concept {
            concept = spec.to_concept;
        }
    }
    concept
}

pub(crate) fn validate_schedule(schedule: &[DriftSpec], length: u64) -> Result<()> {
    let mut previous = 0;
    for spec in schedule {
        spec.validate()?;
        if spec.position <= previous {
            return Err(Error::Config(
                "drift positions must be strictly increasing".into(),
            ));
        }
        if spec.position >= length {
            return Err(Error::Config(format!(
                "drift at {} lies beyond stream length {length}",
                spec.position
            )));
        }
        previous = spec.position;
    }
    Ok(())
}

pub(crate) fn validate_noise(noise_rate: f64) -> Result<()> {
    if !(0.0..0.5).contains(&noise_rate) {
        return Err(Error::Config(format!(
            "noise_rate {noise_rate} must lie in [0, 0.5)"
        )));
    }
    Ok(())
}
