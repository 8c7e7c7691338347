//! Hoeffding Adaptive Tree: every node watches its own error with ADWIN
//! and grows an alternate subtree when that error rises. The alternate
//! replaces the node once it is significantly more accurate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::leaf::{LeafStats, SplitDecision};
use super::tree::branch;
use super::HatParams;
use crate::drift::Adwin;
use crate::learners::sampling::poisson;
use crate::learners::{argmax, normalize, Classifier};
use crate::stream::ClassId;

/// Confidence of the replacement test between a node and its alternate.
const SWITCH_CONFIDENCE: f64 = 0.05;

#[derive(Debug, Clone)]
enum Kind {
    Leaf(LeafStats),
    Split {
        feature: usize,
        threshold: f64,
        children: Box<[HatNode; 2]>,
    },
}

#[derive(Debug, Clone)]
struct HatNode {
    kind: Kind,
    error: Adwin,
    alternate: Option<Box<HatNode>>,
    weight_seen: f64,
}

impl HatNode {
    fn leaf(class_weights: Vec<f64>, delta: f64) -> Self {
        Self {
            kind: Kind::Leaf(LeafStats::new(class_weights, None)),
            error: Adwin::new(delta),
            alternate: None,
            weight_seen: 0.0,
        }
    }

    fn from_split(decision: SplitDecision, delta: f64) -> Kind {
        Kind::Split {
            feature: decision.feature,
            threshold: decision.threshold,
            children: Box::new([
                HatNode::leaf(decision.left, delta),
                HatNode::leaf(decision.right, delta),
            ]),
        }
    }

    fn predict_proba(&self, x: &[f64], params: &HatParams) -> Vec<f64> {
        let mut node = self;
        loop {
            match &node.kind {
                Kind::Leaf(stats) => return stats.predict_proba(x, &params.tree),
                Kind::Split {
                    feature,
                    threshold,
                    children,
                } => node = &children[branch(x, *feature, *threshold)],
            }
        }
    }

    /// Learns one sample on the path below this node. `n_classes` and
    /// `params` are shared, `w` is the (possibly bootstrapped) weight.
    fn learn(&mut self, x: &[f64], y: ClassId, w: f64, n_classes: usize, params: &HatParams) {
        let wrong = argmax(&self.predict_proba(x, params)) != y;
        let old_error = self.error.estimation();
        self.error.update_bit(wrong);
        let increased = self.error.estimation() > old_error;
        self.weight_seen += w;
        let threshold = f64::from(params.drift_window_threshold);

        if let Kind::Split { .. } = self.kind {
            if increased && self.alternate.is_none() && self.weight_seen >= threshold {
                let mut alt = HatNode::leaf(vec![0.0; n_classes], params.adwin_confidence);
                alt.weight_seen = 0.0;
                self.alternate = Some(Box::new(alt));
            }
        }

        if let Some(alt) = &self.alternate {
            let (n_main, n_alt) = (self.error.width() as f64, alt.error.width() as f64);
            if n_main > threshold && n_alt > threshold {
                let e_main = self.error.estimation();
                let e_alt = alt.error.estimation();
                let e = e_main.clamp(0.0, 1.0);
                let bound = (2.0 * e * (1.0 - e) * (2.0 / SWITCH_CONFIDENCE).ln()
                    * (1.0 / n_alt + 1.0 / n_main))
                    .sqrt();
                if bound < e_main - e_alt {
                    let alt = *self.alternate.take().expect("alternate checked above");
                    *self = alt;
                } else if bound < e_alt - e_main {
                    self.alternate = None;
                }
            }
        }

        if let Some(alt) = &mut self.alternate {
            alt.learn(x, y, w, n_classes, params);
        }

        match &mut self.kind {
            Kind::Leaf(stats) => {
                stats.learn(x, y, w, &params.tree);
                if let Some(decision) = stats.try_split(&params.tree, n_classes) {
                    self.kind = Self::from_split(decision, params.adwin_confidence);
                }
            }
            Kind::Split {
                feature,
                threshold,
                children,
            } => {
                let b = branch(x, *feature, *threshold);
                children[b].learn(x, y, w, n_classes, params);
            }
        }
    }

    fn counts(&self) -> (usize, usize) {
        match &self.kind {
            Kind::Leaf(_) => (1, 0),
            Kind::Split { children, .. } => {
                let (l0, s0) = children[0].counts();
                let (l1, s1) = children[1].counts();
                (l0 + l1, s0 + s1 + 1)
            }
        }
    }

    fn n_alternates(&self) -> usize {
        let own = usize::from(self.alternate.is_some());
        match &self.kind {
            Kind::Leaf(_) => own,
            Kind::Split { children, .. } => {
                own + children[0].n_alternates() + children[1].n_alternates()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HoeffdingAdaptiveTree {
    params: HatParams,
    n_classes: usize,
    root: HatNode,
    rng: ChaCha8Rng,
}

impl HoeffdingAdaptiveTree {
    pub fn new(n_classes: usize, params: HatParams, seed: u64) -> Self {
        Self {
            root: HatNode::leaf(vec![0.0; n_classes], params.adwin_confidence),
            params,
            n_classes,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn params(&self) -> &HatParams {
        &self.params
    }

    pub fn n_leaves(&self) -> usize {
        self.root.counts().0
    }

    pub fn n_splits(&self) -> usize {
        self.root.counts().1
    }

    /// Alternate subtrees currently being grown.
    pub fn n_alternates(&self) -> usize {
        self.root.n_alternates()
    }
}

impl Classifier for HoeffdingAdaptiveTree {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes || weight <= 0.0 {
            return;
        }
        let w = if self.params.bootstrap_sampling {
            weight * f64::from(poisson(1.0, &mut self.rng))
        } else {
            weight
        };
        if w <= 0.0 {
            return;
        }
        self.root.learn(x, y, w, self.n_classes, &self.params);
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        let proba = self.root.predict_proba(x, &self.params);
        if proba.len() == self.n_classes {
            proba
        } else {
            normalize(vec![0.0; self.n_classes])
        }
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn clone_box(&self) -> Box<dyn Classifier> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "HoeffdingAdaptiveTreeClassifier"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::SeaConfig;

    fn window_accuracy(model: &mut HoeffdingAdaptiveTree, config: SeaConfig) -> Vec<f64> {
        let mut hits = Vec::new();
        for inst in config.generator().unwrap() {
            let y = inst.label.unwrap();
            hits.push(f64::from(u8::from(model.predict_one(&inst.features) == y)));
            model.learn_one(&inst.features, y);
        }
        hits
    }

    #[test]
    fn recovers_after_abrupt_drift() {
        let mut hat = HoeffdingAdaptiveTree::new(2, HatParams::default(), 7);
        let hits = window_accuracy(&mut hat, SeaConfig::abrupt(20_000, 0.0, 11));
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let before = mean(&hits[7_000..10_000]);
        let after = mean(&hits[12_000..15_000]);
        assert!(after >= before - 0.03, "before {before} after {after}");
    }

    #[test]
    fn bootstrap_off_is_deterministic_across_seeds() {
        let params = HatParams {
            bootstrap_sampling: false,
            ..Default::default()
        };
        let mut a = HoeffdingAdaptiveTree::new(2, params, 1);
        let mut b = HoeffdingAdaptiveTree::new(2, params, 2);
        let cfg = SeaConfig::abrupt(5_000, 0.1, 3);
        assert_eq!(window_accuracy(&mut a, cfg.clone()), window_accuracy(&mut b, cfg));
    }
}
