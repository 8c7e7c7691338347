//! Online classifiers.
//!
//! Every learner predicts a full class distribution at any time, including
//! before it has seen a sample (uniform), and breaks argmax ties towards
//! the lowest class id so that replays are deterministic.

mod arf;
mod bagging;
mod boosting;
pub mod hoeffding;
mod knn;
mod linear;
mod sampling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::ClassId;

pub use self::arf::{AdaptiveRandomForest, ArfParams, MaxFeatures};
pub use self::bagging::{BaggingMethod, LeveragingBagging, LeveragingParams, OzaBagging};
pub use self::boosting::OnlineAdaBoost;
pub use self::hoeffding::{
    hoeffding_bound, HatParams, HoeffdingAdaptiveTree, HoeffdingTree, HoeffdingTreeParams,
    LeafPrediction, SplitCriterion,
};
pub use self::knn::KnnClassifier;
pub use self::linear::{LogisticRegression, Perceptron};
pub use self::sampling::Resampling;

pub trait Classifier: Send {
    /// Learns `(x, y)` with an importance weight. Models without native
    /// weight support learn the sample `round(weight)` times.
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64);

    fn learn_one(&mut self, x: &[f64], y: ClassId) {
        self.learn_weighted(x, y, 1.0);
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64>;

    fn predict_one(&self, x: &[f64]) -> ClassId {
        argmax(&self.predict_proba_one(x))
    }

    fn n_classes(&self) -> usize;

    fn clone_box(&self) -> Box<dyn Classifier>;

    fn name(&self) -> &'static str;
}

impl Clone for Box<dyn Classifier> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> ClassId {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Normalises non-negative scores into a distribution; all-zero becomes
/// uniform.
pub fn normalize(mut scores: Vec<f64>) -> Vec<f64> {
    let total: f64 = scores.iter().sum();
    if total > 0.0 && total.is_finite() {
        scores.iter_mut().for_each(|s| *s /= total);
    } else {
        let n = scores.len().max(1) as f64;
        scores.iter_mut().for_each(|s| *s = 1.0 / n);
    }
    scores
}

pub(crate) fn repeat_count(weight: f64) -> usize {
    weight.round().max(0.0) as usize
}

/// Majority vote over member predictions, optionally weighted.
pub(crate) fn vote(predictions: impl IntoIterator<Item = (ClassId, f64)>, n_classes: usize) -> Vec<f64> {
    let mut votes = vec![0.0; n_classes];
    for (class, weight) in predictions {
        if class < n_classes {
            votes[class] += weight;
        }
    }
    normalize(votes)
}

/// Base learners available inside the bagging and boosting ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseLearner {
    LogisticRegression,
    KnnClassifier,
    Perceptron,
    HoeffdingTree,
}

impl BaseLearner {
    pub const ALL: [BaseLearner; 4] = [
        Self::LogisticRegression,
        Self::KnnClassifier,
        Self::Perceptron,
        Self::HoeffdingTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LogisticRegression => "LogisticRegression",
            Self::KnnClassifier => "KNNClassifier",
            Self::Perceptron => "Perceptron",
            Self::HoeffdingTree => "HoeffdingTreeClassifier",
        }
    }

    /// A fresh learner with default hyperparameters.
    pub fn build(self, n_classes: usize) -> Box<dyn Classifier> {
        match self {
            Self::LogisticRegression => Box::new(LogisticRegression::new(n_classes)),
            Self::KnnClassifier => Box::new(KnnClassifier::new(n_classes)),
            Self::Perceptron => Box::new(Perceptron::new(n_classes)),
            Self::HoeffdingTree => Box::new(HoeffdingTree::new(
                n_classes,
                HoeffdingTreeParams::default(),
            )),
        }
    }
}

impl std::str::FromStr for BaseLearner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownVariant {
                kind: "base learner",
                value: s.to_string(),
            })
    }
}
