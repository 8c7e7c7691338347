//! Hoeffding trees: incremental decision trees that split a leaf once the
//! Hoeffding bound separates the best candidate split from the runner-up.

mod hat;
mod leaf;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::hat::HoeffdingAdaptiveTree;
pub use self::tree::HoeffdingTree;

/// `sqrt(R² ln(1/δ) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("hoeffding bound needs n >= 1, got {n}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("confidence {delta} outside (0, 1)")));
    }
    if !(range > 0.0) {
        return Err(Error::Domain(format!("range {range} must be positive")));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    Hellinger,
    /// Information gain (entropy reduction).
    InfoGini,
}

impl SplitCriterion {
    pub const ALL: [SplitCriterion; 3] = [Self::Gini, Self::Hellinger, Self::InfoGini];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gini => "gini",
            Self::Hellinger => "hellinger",
            Self::InfoGini => "info_gini",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownVariant {
                kind: "split criterion",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafPrediction {
    /// Majority class.
    Mc,
    /// Naive Bayes over per-class Gaussians.
    Nb,
    /// Whichever of the two has been more accurate at the leaf.
    Nba,
}

impl LeafPrediction {
    pub const ALL: [LeafPrediction; 3] = [Self::Mc, Self::Nb, Self::Nba];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mc => "mc",
            Self::Nb => "nb",
            Self::Nba => "nba",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownVariant {
                kind: "leaf prediction",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTreeParams {
    pub grace_period: u32,
    pub split_criterion: SplitCriterion,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub leaf_prediction: LeafPrediction,
    /// Leaves with less weight than this predict by majority class.
    pub nb_threshold: u32,
}

impl Default for HoeffdingTreeParams {
    fn default() -> Self {
        Self {
            grace_period: 200,
            split_criterion: SplitCriterion::InfoGini,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            leaf_prediction: LeafPrediction::Nba,
            nb_threshold: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatParams {
    pub tree: HoeffdingTreeParams,
    pub bootstrap_sampling: bool,
    pub drift_window_threshold: u32,
    pub adwin_confidence: f64,
}

impl Default for HatParams {
    fn default() -> Self {
        Self {
            tree: HoeffdingTreeParams::default(),
            bootstrap_sampling: true,
            drift_window_threshold: 300,
            adwin_confidence: 2e-3,
        }
    }
}
