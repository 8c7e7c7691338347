use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::leaf::{random_subspace, LeafStats, SplitDecision};
use super::HoeffdingTreeParams;
use crate::learners::{normalize, Classifier};
use crate::stream::ClassId;

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Leaf(LeafStats),
    Split {
        feature: usize,
        threshold: f64,
        children: Box<[Node; 2]>,
    },
}

/// Branch index for a value; missing or non-finite values go left.
pub(crate) fn branch(x: &[f64], feature: usize, threshold: f64) -> usize {
    match x.get(feature) {
        Some(&v) if v > threshold => 1,
        _ => 0,
    }
}

impl Node {
    fn leaf_mut(&mut self, x: &[f64]) -> &mut Node {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(_) => return node,
                Node::Split {
                    feature,
                    threshold,
                    children,
                } => {
                    let b = branch(x, *feature, *threshold);
                    node = &mut children[b];
                }
            }
        }
    }

    fn leaf(&self, x: &[f64]) -> &LeafStats {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(stats) => return stats,
                Node::Split {
                    feature,
                    threshold,
                    children,
                } => node = &children[branch(x, *feature, *threshold)],
            }
        }
    }

    fn count(&self) -> (usize, usize) {
        match self {
            Node::Leaf(_) => (1, 0),
            Node::Split { children, .. } => {
                let (l0, s0) = children[0].count();
                let (l1, s1) = children[1].count();
                (l0 + l1, s0 + s1 + 1)
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { children, .. } => 1 + children[0].depth().max(children[1].depth()),
        }
    }
}

/// Incremental decision tree over numeric attributes.
///
/// When built with [`HoeffdingTree::with_subspace`], every leaf samples a
/// random attribute subset on creation and only considers those
/// attributes for splits, as the trees inside a random forest do.
#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    params: HoeffdingTreeParams,
    n_classes: usize,
    root: Node,
    subspace: Option<usize>,
    rng: ChaCha8Rng,
}

impl HoeffdingTree {
    pub fn new(n_classes: usize, params: HoeffdingTreeParams) -> Self {
        Self {
            params,
            n_classes,
            root: Node::Leaf(LeafStats::new(vec![0.0; n_classes], None)),
            subspace: None,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn with_subspace(
        n_classes: usize,
        params: HoeffdingTreeParams,
        subspace_size: usize,
        seed: u64,
    ) -> Self {
        let mut tree = Self::new(n_classes, params);
        tree.subspace = Some(subspace_size.max(1));
        tree.rng = ChaCha8Rng::seed_from_u64(seed);
        tree
    }

    pub fn params(&self) -> &HoeffdingTreeParams {
        &self.params
    }

    pub fn n_leaves(&self) -> usize {
        self.root.count().0
    }

    pub fn n_splits(&self) -> usize {
        self.root.count().1
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Replaces a leaf by a split with two fresh leaves.
pub(crate) fn split_leaf(decision: SplitDecision, child_features: [Option<Vec<usize>>; 2]) -> Node {
    let SplitDecision {
        feature,
        threshold,
        left,
        right,
    } = decision;
    let [fl, fr] = child_features;
    Node::Split {
        feature,
        threshold,
        children: Box::new([
            Node::Leaf(LeafStats::new(left, fl)),
            Node::Leaf(LeafStats::new(right, fr)),
        ]),
    }
}

impl Classifier for HoeffdingTree {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes || weight <= 0.0 {
            return;
        }
        let dim = x.len();
        let subspace = self.subspace;
        let node = self.root.leaf_mut(x);
        let Node::Leaf(stats) = node else {
            unreachable!("leaf_mut stops at a leaf")
        };
        if let Some(size) = subspace {
            if !stats.has_features() {
                stats.set_features(random_subspace(dim, size, &mut self.rng));
            }
        }
        stats.learn(x, y, weight, &self.params);
        if let Some(decision) = stats.try_split(&self.params, self.n_classes) {
            let children = match subspace {
                Some(size) => [
                    Some(random_subspace(dim, size, &mut self.rng)),
                    Some(random_subspace(dim, size, &mut self.rng)),
                ],
                None => [None, None],
            };
            *node = split_leaf(decision, children);
        }
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        let stats = self.root.leaf(x);
        let proba = stats.predict_proba(x, &self.params);
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
        "HoeffdingTreeClassifier"
    }
}
