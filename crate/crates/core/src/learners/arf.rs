//! Adaptive Random Forest.
//!
//! Each member is a Hoeffding tree restricted to a random attribute
//! subset per leaf, trained with `Poisson(λ)` weights. A warning-level
//! ADWIN starts a background tree; a drift-level ADWIN swaps it in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bagging::member_seeds;
use super::hoeffding::{HoeffdingTree, HoeffdingTreeParams, LeafPrediction, SplitCriterion};
use crate::drift::Adwin;
use crate::error::{Error, Result};
use crate::learners::sampling::poisson;
use crate::learners::{normalize, vote, Classifier, Resampling};
use crate::stream::ClassId;

pub const WARNING_DELTA: f64 = 0.01;
pub const DRIFT_DELTA: f64 = 0.001;

/// Attribute subset size per split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Fraction(f64),
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn resolve(self, dim: usize) -> usize {
        let d = dim as f64;
        let m = match self {
            Self::Fraction(f) => (f * d) as usize,
            Self::Sqrt => d.sqrt().round() as usize,
            Self::Log2 => d.log2().round() as usize,
            Self::All => dim,
        };
        m.clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArfParams {
    pub n_models: usize,
    pub max_features: MaxFeatures,
    pub lambda_value: f64,
    pub grace_period: u32,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub leaf_prediction: LeafPrediction,
    pub nb_threshold: u32,
}

impl Default for ArfParams {
    fn default() -> Self {
        Self {
            n_models: 10,
            max_features: MaxFeatures::Sqrt,
            lambda_value: 6.0,
            grace_period: 50,
            split_confidence: 1e-2,
            tie_threshold: 0.05,
            leaf_prediction: LeafPrediction::Nba,
            nb_threshold: 0,
        }
    }
}

impl ArfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_models == 0 {
            return Err(Error::Config("n_models must be at least 1".into()));
        }
        if !(self.lambda_value > 0.0) {
            return Err(Error::Config("lambda_value must be positive".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("max_features fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    fn tree_params(&self) -> HoeffdingTreeParams {
        HoeffdingTreeParams {
            grace_period: self.grace_period,
            split_criterion: SplitCriterion::InfoGini,
            split_confidence: self.split_confidence,
            tie_threshold: self.tie_threshold,
            leaf_prediction: self.leaf_prediction,
            nb_threshold: self.nb_threshold,
        }
    }
}

#[derive(Debug, Clone)]
struct ForestMember {
    tree: HoeffdingTree,
    background: Option<HoeffdingTree>,
    warning: Adwin,
    drift: Adwin,
    rng: ChaCha8Rng,
    tree_seed: u64,
    seen: f64,
    correct: f64,
    replacements: u64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveRandomForest {
    params: ArfParams,
    n_classes: usize,
    seed: u64,
    members: Vec<ForestMember>,
    subspace: usize,
    resampling: Option<Resampling>,
    same_tree_seeds: bool,
}

impl AdaptiveRandomForest {
    pub fn new(params: ArfParams, n_classes: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            n_classes,
            seed,
            members: Vec::new(),
            subspace: 0,
            resampling: None,
            same_tree_seeds: false,
        })
    }

    /// Replaces the `Poisson(lambda_value)` draw.
    pub fn with_resampling(mut self, resampling: Resampling) -> Self {
        self.resampling = Some(resampling);
        self
    }

    /// Gives every tree the same attribute-sampling seed.
    pub fn with_shared_tree_seed(mut self) -> Self {
        self.same_tree_seeds = true;
        self
    }

    pub fn params(&self) -> &ArfParams {
        &self.params
    }

    /// Number of times a member tree was replaced after a drift.
    pub fn replacements(&self) -> u64 {
        self.members.iter().map(|m| m.replacements).sum()
    }

    fn new_tree(&self, seed: u64) -> HoeffdingTree {
        HoeffdingTree::with_subspace(self.n_classes, self.params.tree_params(), self.subspace, seed)
    }

    fn init(&mut self, dim: usize) {
        self.subspace = self.params.max_features.resolve(dim);
        let seeds = member_seeds(self.seed, self.params.n_models);
        let shared = seeds[0].wrapping_add(1);
        self.members = seeds
            .into_iter()
            .map(|s| {
                let tree_seed = if self.same_tree_seeds { shared } else { s.wrapping_add(1) };
                ForestMember {
                    tree: self.new_tree(tree_seed),
                    background: None,
                    warning: Adwin::new(WARNING_DELTA),
                    drift: Adwin::new(DRIFT_DELTA),
                    rng: ChaCha8Rng::seed_from_u64(s),
                    tree_seed,
                    seen: 0.0,
                    correct: 0.0,
                    replacements: 0,
                }
            })
            .collect();
    }

    /// Per-member predictions, exposed for inspection.
    pub fn member_predictions(&self, x: &[f64]) -> Vec<ClassId> {
        self.members.iter().map(|m| m.tree.predict_one(x)).collect()
    }
}

impl Classifier for AdaptiveRandomForest {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes {
            return;
        }
        if self.members.is_empty() {
            self.init(x.len());
        }
        let lambda = self.params.lambda_value;
        let resampling = self.resampling;
        let mut members = std::mem::take(&mut self.members);
        for m in &mut members {
            let wrong = m.tree.predict_one(x) != y;
            m.seen += 1.0;
            m.correct += f64::from(u8::from(!wrong));
            let k = match resampling {
                Some(r) => r.draw(&mut m.rng),
                None => poisson(lambda, &mut m.rng),
            };
            if k > 0 {
                let w = f64::from(k) * weight;
                m.tree.learn_weighted(x, y, w);
                if let Some(bg) = &mut m.background {
                    bg.learn_weighted(x, y, w);
                }
            }
            let before = m.warning.estimation();
            if m.warning.update_bit(wrong) && m.warning.estimation() > before {
                m.tree_seed = m.tree_seed.wrapping_add(0x9E37_79B9);
                m.background = Some(self.new_tree(m.tree_seed));
                m.warning = Adwin::new(WARNING_DELTA);
            }
            let before = m.drift.estimation();
            if m.drift.update_bit(wrong) && m.drift.estimation() > before {
                m.tree_seed = m.tree_seed.wrapping_add(0x9E37_79B9);
                m.tree = m.background.take().unwrap_or_else(|| self.new_tree(m.tree_seed));
                m.warning = Adwin::new(WARNING_DELTA);
                m.drift = Adwin::new(DRIFT_DELTA);
                m.seen = 0.0;
                m.correct = 0.0;
                m.replacements += 1;
            }
        }
        self.members = members;
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        if self.members.is_empty() {
            return normalize(vec![0.0; self.n_classes]);
        }
        let weights: Vec<f64> = self
            .members
            .iter()
            .map(|m| if m.seen > 0.0 { m.correct / m.seen } else { 0.0 })
            .collect();
        let all_zero = weights.iter().all(|&w| w == 0.0);
        vote(
            self.members
                .iter()
                .zip(&weights)
                .map(|(m, &w)| (m.tree.predict_one(x), if all_zero { 1.0 } else { w })),
            self.n_classes,
        )
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn clone_box(&self) -> Box<dyn Classifier> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "AdaptiveRandomForestClassifier"
    }
}
