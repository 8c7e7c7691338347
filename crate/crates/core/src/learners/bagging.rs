//! Online bagging ensembles with a per-member ADWIN on the member error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::drift::Adwin;
use crate::error::{Error, Result};
use crate::learners::sampling::poisson;
use crate::learners::{vote, BaseLearner, Classifier, Resampling};
use crate::stream::ClassId;

/// Member-level ADWIN confidence for Oza bagging.
pub const OZA_ADWIN_DELTA: f64 = 0.002;

#[derive(Clone)]
pub(crate) struct Member {
    pub model: Box<dyn Classifier>,
    pub detector: Option<Adwin>,
    pub rng: ChaCha8Rng,
    pub resets: u64,
}

impl Member {
    fn new(model: Box<dyn Classifier>, delta: Option<f64>, seed: u64) -> Self {
        Self {
            model,
            detector: delta.map(Adwin::new),
            rng: ChaCha8Rng::seed_from_u64(seed),
            resets: 0,
        }
    }

    /// Feeds the member's error on `(x, y)` to its detector. Returns true
    /// when the detector found a significant increase in error.
    fn watch(&mut self, wrong: bool) -> bool {
        let Some(adwin) = &mut self.detector else {
            return false;
        };
        let before = adwin.estimation();
        adwin.update_bit(wrong) && adwin.estimation() > before
    }

    fn reset(&mut self, base: BaseLearner, n_classes: usize) {
        self.model = base.build(n_classes);
        if let Some(adwin) = &mut self.detector {
            *adwin = Adwin::new(adwin.delta());
        }
        self.resets += 1;
    }
}

pub(crate) fn member_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| master.random()).collect()
}

/// Bagging where each member sees each sample `k ~ Poisson(1)` times and
/// is reset when its ADWIN reports a rise in error.
#[derive(Clone)]
pub struct OzaBagging {
    base: BaseLearner,
    n_classes: usize,
    members: Vec<Member>,
    resampling: Resampling,
    weight_drawn: f64,
    draws: u64,
}

impl OzaBagging {
    pub fn new(base: BaseLearner, n_models: usize, n_classes: usize, seed: u64) -> Result<Self> {
        if n_models == 0 {
            return Err(Error::Config("n_models must be at least 1".into()));
        }
        let members = member_seeds(seed, n_models)
            .into_iter()
            .map(|s| Member::new(base.build(n_classes), Some(OZA_ADWIN_DELTA), s))
            .collect();
        Ok(Self {
            base,
            n_classes,
            members,
            resampling: Resampling::Poisson(1.0),
            weight_drawn: 0.0,
            draws: 0,
        })
    }

    /// Replaces the Poisson(1) draw, e.g. by `Fixed(1)` to disable resampling.
    pub fn with_resampling(mut self, resampling: Resampling) -> Self {
        self.resampling = resampling;
        self
    }

    pub fn without_drift_detection(mut self) -> Self {
        self.members.iter_mut().for_each(|m| m.detector = None);
        self
    }

    pub fn n_models(&self) -> usize {
        self.members.len()
    }

    pub fn base(&self) -> BaseLearner {
        self.base
    }

    /// Average per-member training weight drawn so far.
    pub fn mean_training_weight(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.weight_drawn / self.draws as f64
        }
    }

    pub fn member_resets(&self) -> u64 {
        self.members.iter().map(|m| m.resets).sum()
    }
}

impl Classifier for OzaBagging {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes {
            return;
        }
        for member in &mut self.members {
            let wrong = member.model.predict_one(x) != y;
            let k = self.resampling.draw(&mut member.rng);
            self.weight_drawn += f64::from(k);
            self.draws += 1;
            if k > 0 {
                member.model.learn_weighted(x, y, f64::from(k) * weight);
            }
            if member.watch(wrong) {
                member.reset(self.base, self.n_classes);
            }
        }
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        vote(
            self.members.iter().map(|m| (m.model.predict_one(x), 1.0)),
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
        "OzaBaggingADWIN"
    }
}

/// How leveraging bagging turns one sample into a member training weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaggingMethod {
    /// `k ~ Poisson(6w)`.
    Bag,
    /// Misclassified samples get weight 1; others weight 1 with
    /// probability `e / (1 - e)`, `e` being the member's error estimate.
    Me,
    /// Weight 1 with probability 0.5, else 0.
    Half,
    /// `k = 1 + Poisson(6w - 1)`: every sample is kept, none dropped.
    Wt,
    /// `k = min(Poisson(6w), 1)`: subsampling without replacement.
    Subag,
}

impl BaggingMethod {
    pub const ALL: [BaggingMethod; 5] = [Self::Bag, Self::Me, Self::Half, Self::Wt, Self::Subag];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bag => "bag",
            Self::Me => "me",
            Self::Half => "half",
            Self::Wt => "wt",
            Self::Subag => "subag",
        }
    }
}

impl std::str::FromStr for BaggingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownVariant {
                kind: "bagging method",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeveragingParams {
    pub base: BaseLearner,
    pub n_models: usize,
    pub w: f64,
    pub adwin_delta: f64,
    pub bagging_method: BaggingMethod,
}

impl LeveragingParams {
    /// Poisson rate multiplied by `w`.
    pub const LAMBDA: f64 = 6.0;

    pub fn validate(&self) -> Result<()> {
        if self.n_models == 0 {
            return Err(Error::Config("n_models must be at least 1".into()));
        }
        if !(self.w > 0.0 && self.w.is_finite()) {
            return Err(Error::Config(format!("w must be positive, got {}", self.w)));
        }
        if !(self.adwin_delta > 0.0 && self.adwin_delta < 1.0) {
            return Err(Error::Config(format!(
                "adwin_delta {} outside (0, 1)",
                self.adwin_delta
            )));
        }
        Ok(())
    }
}

impl Default for LeveragingParams {
    fn default() -> Self {
        Self {
            base: BaseLearner::HoeffdingTree,
            n_models: 10,
            w: 1.0,
            adwin_delta: 0.002,
            bagging_method: BaggingMethod::Bag,
        }
    }
}

#[derive(Clone)]
pub struct LeveragingBagging {
    params: LeveragingParams,
    n_classes: usize,
    members: Vec<Member>,
    fixed: Option<u32>,
    weight_drawn: f64,
    draws: u64,
}

impl LeveragingBagging {
    pub fn new(params: LeveragingParams, n_classes: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        let members = member_seeds(seed, params.n_models)
            .into_iter()
            .map(|s| Member::new(params.base.build(n_classes), Some(params.adwin_delta), s))
            .collect();
        Ok(Self {
            params,
            n_classes,
            members,
            fixed: None,
            weight_drawn: 0.0,
            draws: 0,
        })
    }

    /// Overrides the bagging method by a constant training weight.
    pub fn with_fixed_weight(mut self, k: u32) -> Self {
        self.fixed = Some(k);
        self
    }

    pub fn without_drift_detection(mut self) -> Self {
        self.members.iter_mut().for_each(|m| m.detector = None);
        self
    }

    pub fn params(&self) -> &LeveragingParams {
        &self.params
    }

    pub fn mean_training_weight(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.weight_drawn / self.draws as f64
        }
    }

    pub fn member_resets(&self) -> u64 {
        self.members.iter().map(|m| m.resets).sum()
    }

    fn draw(&self, member: &mut Member, wrong: bool) -> u32 {
        if let Some(k) = self.fixed {
            return k;
        }
        let lambda = LeveragingParams::LAMBDA * self.params.w;
        let rng = &mut member.rng;
        match self.params.bagging_method {
            BaggingMethod::Bag => poisson(lambda, rng),
            BaggingMethod::Me => {
                if wrong {
                    1
                } else {
                    let e = member.detector.as_ref().map_or(0.0, Adwin::estimation);
                    let p = if e >= 0.5 { 1.0 } else { e / (1.0 - e) };
                    u32::from(rng.random::<f64>() < p)
                }
            }
            BaggingMethod::Half => u32::from(rng.random::<f64>() < 0.5),
            BaggingMethod::Wt => 1 + poisson(lambda - 1.0, rng),
            BaggingMethod::Subag => poisson(lambda, rng).min(1),
        }
    }
}

impl Classifier for LeveragingBagging {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes {
            return;
        }
        let mut members = std::mem::take(&mut self.members);
        for member in &mut members {
            let wrong = member.model.predict_one(x) != y;
            let k = self.draw(member, wrong);
            self.weight_drawn += f64::from(k);
            self.draws += 1;
            if k > 0 {
                member.model.learn_weighted(x, y, f64::from(k) * weight);
            }
            if member.watch(wrong) {
                member.reset(self.params.base, self.n_classes);
            }
        }
        self.members = members;
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        vote(
            self.members.iter().map(|m| (m.model.predict_one(x), 1.0)),
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
        "LeveragingBaggingClassifier"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::argmax;
    use crate::stream::SeaConfig;

    fn sea(n: u64, seed: u64) -> Vec<(Vec<f64>, ClassId)> {
        SeaConfig::stationary(1, 0.0, n, seed)
            .generator()
            .unwrap()
            .map(|i| (i.features, i.label.unwrap()))
            .collect()
    }

    fn prequential(model: &mut dyn Classifier, data: &[(Vec<f64>, ClassId)]) -> f64 {
        let mut correct = 0;
        for (x, y) in data {
            correct += usize::from(model.predict_one(x) == *y);
            model.learn_one(x, *y);
        }
        correct as f64 / data.len() as f64
    }

    #[test]
    fn oza_mean_weight_is_one() {
        let mut bag = OzaBagging::new(BaseLearner::Perceptron, 3, 2, 5).unwrap();
        for (x, y) in sea(100_000 / 3 + 1, 1) {
            bag.learn_one(&x, y);
        }
        let mean = bag.mean_training_weight();
        assert!((0.99..=1.01).contains(&mean), "{mean}");
    }

    #[test]
    fn leveraging_mean_weight_is_six() {
        let params = LeveragingParams {
            base: BaseLearner::Perceptron,
            n_models: 2,
            ..Default::default()
        };
        let mut bag = LeveragingBagging::new(params, 2, 5).unwrap();
        for (x, y) in sea(50_000, 2) {
            bag.learn_one(&x, y);
        }
        let mean = bag.mean_training_weight();
        assert!((mean - 6.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn unknown_method_is_an_error() {
        assert!("boost".parse::<BaggingMethod>().is_err());
        for m in BaggingMethod::ALL {
            assert_eq!(m.as_str().parse::<BaggingMethod>().unwrap(), m);
        }
    }

    #[test]
    fn degenerate_ensembles_match_base_learner() {
        let data = sea(3_000, 3);
        for base in BaseLearner::ALL {
            let mut single = base.build(2);
            let mut oza = OzaBagging::new(base, 1, 2, 1)
                .unwrap()
                .with_resampling(Resampling::Fixed(1))
                .without_drift_detection();
            let params = LeveragingParams {
                base,
                n_models: 1,
                ..Default::default()
            };
            let mut lev = LeveragingBagging::new(params, 2, 1)
                .unwrap()
                .with_fixed_weight(1)
                .without_drift_detection();
            for (x, y) in &data {
                let expected = single.predict_one(x);
                assert_eq!(oza.predict_one(x), expected);
                assert_eq!(lev.predict_one(x), expected);
                single.learn_one(x, *y);
                oza.learn_one(x, *y);
                lev.learn_one(x, *y);
            }
        }
    }

    #[test]
    fn ensembles_not_worse_than_base() {
        let data = sea(10_000, 4);
        let base = prequential(&mut *BaseLearner::HoeffdingTree.build(2), &data);
        let mut oza = OzaBagging::new(BaseLearner::HoeffdingTree, 10, 2, 7).unwrap();
        let mut lev = LeveragingBagging::new(LeveragingParams::default(), 2, 7).unwrap();
        let oza_acc = prequential(&mut oza, &data);
        let lev_acc = prequential(&mut lev, &data);
        assert!(oza_acc >= base - 0.02, "oza {oza_acc} base {base}");
        assert!(lev_acc >= base - 0.02, "lev {lev_acc} base {base}");
    }

    #[test]
    fn every_method_trains() {
        let data = sea(4_000, 6);
        for method in BaggingMethod::ALL {
            let params = LeveragingParams {
                base: BaseLearner::HoeffdingTree,
                n_models: 3,
                bagging_method: method,
                ..Default::default()
            };
            let mut lev = LeveragingBagging::new(params, 2, 2).unwrap();
            let acc = prequential(&mut lev, &data);
            assert!(acc > 0.8, "{method:?}: {acc}");
        }
    }

    #[test]
    fn same_seed_same_predictions() {
        let data = sea(2_000, 8);
        let mut a = LeveragingBagging::new(LeveragingParams::default(), 2, 3).unwrap();
        let mut b = a.clone();
        for (x, y) in &data {
            assert_eq!(argmax(&a.predict_proba_one(x)), argmax(&b.predict_proba_one(x)));
            a.learn_one(x, *y);
            b.learn_one(x, *y);
        }
    }
}
