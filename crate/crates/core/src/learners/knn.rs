use std::collections::VecDeque;

use crate::learners::{normalize, repeat_count, Classifier};
use crate::stream::ClassId;

/// k-nearest neighbours over a sliding window of the latest samples.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    n_classes: usize,
    k: usize,
    window_size: usize,
    window: VecDeque<(Vec<f64>, ClassId)>,
}

impl KnnClassifier {
    pub const DEFAULT_K: usize = 5;
    pub const DEFAULT_WINDOW: usize = 1000;

    pub fn new(n_classes: usize) -> Self {
        Self::with_params(n_classes, Self::DEFAULT_K, Self::DEFAULT_WINDOW)
    }

    pub fn with_params(n_classes: usize, k: usize, window_size: usize) -> Self {
        Self {
            n_classes,
            k: k.max(1),
            window_size: window_size.max(1),
            window: VecDeque::with_capacity(window_size.min(4096)),
        }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl Classifier for KnnClassifier {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes {
            return;
        }
        for _ in 0..repeat_count(weight) {
            if self.window.len() == self.window_size {
                self.window.pop_front();
            }
            self.window.push_back((x.to_vec(), y));
        }
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        // The k best (distance, window position) pairs, kept sorted; ties
        // favour the older sample because positions are scanned in order.
        let k = self.k.min(self.window.len());
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, (p, _)) in self.window.iter().enumerate() {
            let d = squared_distance(p, x);
            if best.len() == k && best.last().is_some_and(|w| d.total_cmp(&w.0).is_ge()) {
                continue;
            }
            let at = best.partition_point(|b| b.0.total_cmp(&d).is_le());
            best.insert(at, (d, i));
            best.truncate(k);
        }
        let mut votes = vec![0.0; self.n_classes];
        for &(_, i) in &best {
            votes[self.window[i].1] += 1.0;
        }
        normalize(votes)
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn clone_box(&self) -> Box<dyn Classifier> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "KNNClassifier"
    }
}
