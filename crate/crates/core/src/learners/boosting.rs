//! Oza's online AdaBoost.
//!
//! The sample weight `λ` starts at 1 and passes through the members in
//! order. Each member trains `k ~ Poisson(λ)` times; if it then classifies
//! the sample correctly `λ` shrinks by `1 / (2(1 - ε))`, otherwise it grows
//! by `1 / (2ε)`, where `ε = λ_sw / (λ_sc + λ_sw)` is the member's weighted
//! error so far.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::learners::{vote, BaseLearner, Classifier, Resampling};
use crate::stream::ClassId;

/// Floor on ε when turning it into a vote weight.
const MIN_ERROR: f64 = 1e-10;

#[derive(Clone)]
pub struct OnlineAdaBoost {
    base: BaseLearner,
    n_classes: usize,
    members: Vec<Box<dyn Classifier>>,
    lambda_sc: Vec<f64>,
    lambda_sw: Vec<f64>,
    rng: ChaCha8Rng,
    poisson: bool,
}

impl OnlineAdaBoost {
    pub fn new(base: BaseLearner, n_models: usize, n_classes: usize, seed: u64) -> Result<Self> {
        if n_models == 0 {
            return Err(Error::Config("n_models must be at least 1".into()));
        }
        Ok(Self {
            base,
            n_classes,
            members: (0..n_models).map(|_| base.build(n_classes)).collect(),
            lambda_sc: vec![0.0; n_models],
            lambda_sw: vec![0.0; n_models],
            rng: ChaCha8Rng::seed_from_u64(seed),
            poisson: true,
        })
    }

    /// `Fixed(_)` trains every member once per sample with weight `λ`.
    pub fn with_resampling(mut self, resampling: Resampling) -> Self {
        self.poisson = matches!(resampling, Resampling::Poisson(_));
        self
    }

    pub fn base(&self) -> BaseLearner {
        self.base
    }

    pub fn n_models(&self) -> usize {
        self.members.len()
    }

    /// Weighted training error `ε` of member `i`.
    pub fn member_error(&self, i: usize) -> Option<f64> {
        let total = self.lambda_sc[i] + self.lambda_sw[i];
        (total > 0.0).then(|| self.lambda_sw[i] / total)
    }

    /// Vote weight `max(0, ln((1 - ε) / ε))`; untrained members get 0.
    pub fn vote_weight(&self, i: usize) -> f64 {
        match self.member_error(i) {
            None => 0.0,
            Some(e) => {
                let e = e.max(MIN_ERROR);
                ((1.0 - e) / e).ln().max(0.0)
            }
        }
    }
}

impl Classifier for OnlineAdaBoost {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes {
            return;
        }
        let mut lambda = weight;
        for i in 0..self.members.len() {
            if self.poisson {
                let k = super::sampling::poisson(lambda, &mut self.rng);
                if k > 0 {
                    self.members[i].learn_weighted(x, y, f64::from(k));
                }
            } else {
                self.members[i].learn_weighted(x, y, lambda);
            }
            if self.members[i].predict_one(x) == y {
                self.lambda_sc[i] += lambda;
                let e = self.lambda_sw[i] / (self.lambda_sc[i] + self.lambda_sw[i]);
                lambda *= 1.0 / (2.0 * (1.0 - e));
            } else {
                self.lambda_sw[i] += lambda;
                let e = self.lambda_sw[i] / (self.lambda_sc[i] + self.lambda_sw[i]);
                lambda *= 1.0 / (2.0 * e);
            }
        }
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        let weights: Vec<f64> = (0..self.members.len()).map(|i| self.vote_weight(i)).collect();
        let all_zero = weights.iter().all(|&w| w == 0.0);
        vote(
            self.members
                .iter()
                .zip(&weights)
                .map(|(m, &w)| (m.predict_one(x), if all_zero { 1.0 } else { w })),
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
        "AdaBoostClassifier"
    }
}
