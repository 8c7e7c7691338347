//! Leaf statistics and split search shared by the tree variants.

use rand::seq::index::sample;
use rand::Rng;

use super::{hoeffding_bound, HoeffdingTreeParams, LeafPrediction, SplitCriterion};
use crate::learners::normalize;
use crate::stream::ClassId;

const CANDIDATE_THRESHOLDS: usize = 10;
const MIN_BRANCH_FRACTION: f64 = 0.01;
const MIN_STD: f64 = 1e-9;

/// Weighted running mean and variance of one attribute for one class.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct GaussianEstimator {
    weight: f64,
    mean: f64,
    m2: f64,
}

impl GaussianEstimator {
    fn add(&mut self, x: f64, w: f64) {
        let total = self.weight + w;
        let delta = x - self.mean;
        self.mean += w * delta / total;
        self.m2 += w * delta * (x - self.mean);
        self.weight = total;
    }

    fn std(&self) -> f64 {
        if self.weight > 1.0 {
            (self.m2.max(0.0) / (self.weight - 1.0)).sqrt()
        } else {
            0.0
        }
    }

    fn log_density(&self, x: f64) -> f64 {
        let std = self.std().max(MIN_STD);
        let z = (x - self.mean) / std;
        -0.5 * z * z - (std * (2.0 * std::f64::consts::PI).sqrt()).ln()
    }

    /// Weight estimated to lie at or below `t`.
    fn weight_below(&self, t: f64) -> f64 {
        let std = self.std();
        if std <= 0.0 {
            return if self.mean <= t { self.weight } else { 0.0 };
        }
        self.weight * normal_cdf((t - self.mean) / std)
    }
}

pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Complementary error function, Chebyshev fit with relative error
/// below 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Per-class Gaussians for one numeric attribute.
#[derive(Debug, Clone)]
pub(crate) struct NumericObserver {
    per_class: Vec<GaussianEstimator>,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl NumericObserver {
    fn new(n_classes: usize) -> Self {
        Self {
            per_class: vec![GaussianEstimator::default(); n_classes],
            min: vec![f64::INFINITY; n_classes],
            max: vec![f64::NEG_INFINITY; n_classes],
        }
    }

    fn add(&mut self, x: f64, class: ClassId, w: f64) {
        if !x.is_finite() {
            return;
        }
        self.per_class[class].add(x, w);
        self.min[class] = self.min[class].min(x);
        self.max[class] = self.max[class].max(x);
    }

    /// Class weights on each side of `t`.
    fn split_at(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.per_class.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for c in 0..n {
            let est = &self.per_class[c];
            if est.weight == 0.0 {
                continue;
            }
            if t < self.min[c] {
                right[c] += est.weight;
            } else if t >= self.max[c] {
                left[c] += est.weight;
            } else {
                let below = est.weight_below(t).clamp(0.0, est.weight);
                left[c] += below;
                right[c] += est.weight - below;
            }
        }
        (left, right)
    }

    fn best_split(
        &self,
        pre: &[f64],
        criterion: SplitCriterion,
    ) -> Option<(f64, f64, Vec<f64>, Vec<f64>)> {
        let lo = self.min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return None;
        }
        let width = (hi - lo) / (CANDIDATE_THRESHOLDS + 1) as f64;
        let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
        for i in 1..=CANDIDATE_THRESHOLDS {
            let t = lo + width * i as f64;
            let (left, right) = self.split_at(t);
            let merit = merit(criterion, pre, &left, &right);
            if best.as_ref().is_none_or(|b| merit > b.0) {
                best = Some((merit, t, left, right));
            }
        }
        best
    }
}

fn entropy(dist: &[f64]) -> f64 {
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -dist
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| {
            let p = w / total;
            p * p.log2()
        })
        .sum::<f64>()
}

fn gini(dist: &[f64]) -> f64 {
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - dist.iter().map(|&w| (w / total).powi(2)).sum::<f64>()
}

/// Hellinger distance between the class distributions of two branches.
fn hellinger(left: &[f64], right: &[f64]) -> f64 {
    let (tl, tr): (f64, f64) = (left.iter().sum(), right.iter().sum());
    if tl <= 0.0 || tr <= 0.0 {
        return 0.0;
    }
    let sum: f64 = left
        .iter()
        .zip(right)
        .map(|(l, r)| ((l / tl).sqrt() - (r / tr).sqrt()).powi(2))
        .sum();
    (sum / 2.0).sqrt()
}

pub(crate) fn merit(criterion: SplitCriterion, pre: &[f64], left: &[f64], right: &[f64]) -> f64 {
    let (wl, wr): (f64, f64) = (left.iter().sum(), right.iter().sum());
    let total = wl + wr;
    if total <= 0.0 || wl / total < MIN_BRANCH_FRACTION || wr / total < MIN_BRANCH_FRACTION {
        return f64::NEG_INFINITY;
    }
    match criterion {
        SplitCriterion::Gini => {
            gini(pre) - (wl / total) * gini(left) - (wr / total) * gini(right)
        }
        SplitCriterion::InfoGini => {
            entropy(pre) - (wl / total) * entropy(left) - (wr / total) * entropy(right)
        }
        SplitCriterion::Hellinger => hellinger(left, right),
    }
}

pub(crate) fn merit_range(criterion: SplitCriterion, n_classes: usize) -> f64 {
    match criterion {
        SplitCriterion::InfoGini => (n_classes.max(2) as f64).log2(),
        SplitCriterion::Gini | SplitCriterion::Hellinger => 1.0,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SplitDecision {
    pub feature: usize,
    pub threshold: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LeafStats {
    pub class_weights: Vec<f64>,
    observers: Vec<Option<NumericObserver>>,
    /// Attribute subset this leaf may split on; all when `None`.
    features: Option<Vec<usize>>,
    weight_at_last_attempt: f64,
    mc_correct: f64,
    nb_correct: f64,
}

impl LeafStats {
    pub fn new(class_weights: Vec<f64>, features: Option<Vec<usize>>) -> Self {
        let weight_at_last_attempt = class_weights.iter().sum();
        Self {
            class_weights,
            observers: Vec::new(),
            features,
            weight_at_last_attempt,
            mc_correct: 0.0,
            nb_correct: 0.0,
        }
    }

    pub fn has_features(&self) -> bool {
        self.features.is_some()
    }

    pub fn set_features(&mut self, features: Vec<usize>) {
        self.features = Some(features);
    }

    pub fn total_weight(&self) -> f64 {
        self.class_weights.iter().sum()
    }

    pub fn learn(&mut self, x: &[f64], y: ClassId, w: f64, params: &HoeffdingTreeParams) {
        let n_classes = self.class_weights.len();
        if y >= n_classes || w <= 0.0 {
            return;
        }
        if params.leaf_prediction == LeafPrediction::Nba {
            if crate::learners::argmax(&self.class_weights) == y {
                self.mc_correct += w;
            }
            if crate::learners::argmax(&self.nb_scores(x)) == y {
                self.nb_correct += w;
            }
        }
        self.class_weights[y] += w;
        if self.observers.len() < x.len() {
            self.observers.resize(x.len(), None);
        }
        let observe = |obs: &mut Option<NumericObserver>, v: f64| {
            obs.get_or_insert_with(|| NumericObserver::new(n_classes))
                .add(v, y, w);
        };
        match &self.features {
            Some(subset) => {
                for &j in subset {
                    if j < x.len() {
                        observe(&mut self.observers[j], x[j]);
                    }
                }
            }
            None => {
                for (j, &v) in x.iter().enumerate() {
                    observe(&mut self.observers[j], v);
                }
            }
        }
    }

    fn nb_scores(&self, x: &[f64]) -> Vec<f64> {
        let total = self.total_weight();
        if total <= 0.0 {
            return normalize(vec![0.0; self.class_weights.len()]);
        }
        let log_scores: Vec<f64> = self
            .class_weights
            .iter()
            .enumerate()
            .map(|(c, &wc)| {
                if wc <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut s = (wc / total).ln();
                for (j, obs) in self.observers.iter().enumerate() {
                    if let (Some(obs), Some(&v)) = (obs, x.get(j)) {
                        if obs.per_class[c].weight > 0.0 {
                            s += obs.per_class[c].log_density(v);
                        }
                    }
                }
                s
            })
            .collect();
        let top = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return normalize(self.class_weights.clone());
        }
        normalize(log_scores.iter().map(|s| (s - top).exp()).collect())
    }

    pub fn predict_proba(&self, x: &[f64], params: &HoeffdingTreeParams) -> Vec<f64> {
        let use_nb = self.total_weight() >= f64::from(params.nb_threshold)
            && match params.leaf_prediction {
                LeafPrediction::Mc => false,
                LeafPrediction::Nb => true,
                LeafPrediction::Nba => self.nb_correct >= self.mc_correct && self.nb_correct > 0.0,
            };
        if use_nb {
            self.nb_scores(x)
        } else {
            normalize(self.class_weights.clone())
        }
    }

    fn is_pure(&self) -> bool {
        self.class_weights.iter().filter(|&&w| w > 0.0).count() < 2
    }

    /// Runs a split attempt if a grace period has elapsed since the last one.
    pub fn try_split(
        &mut self,
        params: &HoeffdingTreeParams,
        n_classes: usize,
    ) -> Option<SplitDecision> {
        let total = self.total_weight();
        if total - self.weight_at_last_attempt < f64::from(params.grace_period) {
            return None;
        }
        self.weight_at_last_attempt = total;
        if self.is_pure() {
            return None;
        }
        let mut candidates: Vec<(f64, Option<SplitDecision>)> = vec![(0.0, None)];
        for (feature, obs) in self.observers.iter().enumerate() {
            if let Some(obs) = obs {
                if let Some((m, threshold, left, right)) =
                    obs.best_split(&self.class_weights, params.split_criterion)
                {
                    candidates.push((
                        m,
                        Some(SplitDecision {
                            feature,
                            threshold,
                            left,
                            right,
                        }),
                    ));
                }
            }
        }
        if candidates.len() < 2 {
            return None;
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let range = merit_range(params.split_criterion, n_classes);
        let eps = hoeffding_bound(range, params.split_confidence, total).ok()?;
        let (best, second) = (candidates[0].0, candidates[1].0);
        let separated = best - second > eps || eps < params.tie_threshold;
        if separated && best > 0.0 {
            candidates.swap_remove(0).1
        } else {
            None
        }
    }
}

/// Draws a random attribute subset of the given size.
pub(crate) fn random_subspace<R: Rng + ?Sized>(dim: usize, size: usize, rng: &mut R) -> Vec<usize> {
    let size = size.clamp(1, dim.max(1));
    if size >= dim {
        return (0..dim).collect();
    }
    let mut chosen = sample(rng, dim, size).into_vec();
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-7);
        assert!((normal_cdf(1.0) - 0.841_344_746).abs() < 1e-6);
        assert!((normal_cdf(-1.96) - 0.024_997_9).abs() < 1e-6);
    }

    #[test]
    fn impurity_measures() {
        assert!((entropy(&[1.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((gini(&[1.0, 1.0]) - 0.5).abs() < 1e-12);
        assert_eq!(hellinger(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(hellinger(&[2.0, 2.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn perfect_split_has_full_gain() {
        let pre = [10.0, 10.0];
        let m = merit(SplitCriterion::InfoGini, &pre, &[10.0, 0.0], &[0.0, 10.0]);
        assert!((m - 1.0).abs() < 1e-12);
        let g = merit(SplitCriterion::Gini, &pre, &[10.0, 0.0], &[0.0, 10.0]);
        assert!((g - 0.5).abs() < 1e-12);
        let lopsided = merit(SplitCriterion::Gini, &pre, &[20.0, 0.0], &[0.0, 0.1]);
        assert_eq!(lopsided, f64::NEG_INFINITY);
    }
}
