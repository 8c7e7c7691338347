//! Linear models trained by stochastic updates.

use crate::learners::{normalize, repeat_count, Classifier};
use crate::stream::ClassId;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Default)]
struct Linear {
    weights: Vec<f64>,
    bias: f64,
}

impl Linear {
    fn score(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }

    fn fit_dim(&mut self, dim: usize) {
        if self.weights.len() < dim {
            self.weights.resize(dim, 0.0);
        }
    }
}

/// Logistic regression with a constant learning rate. Binary tasks use a
/// single model; multiclass tasks train one model per class.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    n_classes: usize,
    learning_rate: f64,
    models: Vec<Linear>,
}

impl LogisticRegression {
    pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

    pub fn new(n_classes: usize) -> Self {
        Self::with_learning_rate(n_classes, Self::DEFAULT_LEARNING_RATE)
    }

    pub fn with_learning_rate(n_classes: usize, learning_rate: f64) -> Self {
        let n_models = if n_classes <= 2 { 1 } else { n_classes };
        Self {
            n_classes,
            learning_rate,
            models: vec![Linear::default(); n_models],
        }
    }

    pub fn weights(&self) -> (&[f64], f64) {
        (&self.models[0].weights, self.models[0].bias)
    }
}

impl Classifier for LogisticRegression {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes || weight <= 0.0 {
            return;
        }
        let binary = self.models.len() == 1;
        for (c, model) in self.models.iter_mut().enumerate() {
            model.fit_dim(x.len());
            let target = if binary { y == 1 } else { y == c };
            let g = sigmoid(model.score(x)) - f64::from(u8::from(target));
            let step = self.learning_rate * weight * g;
            for (w, v) in model.weights.iter_mut().zip(x) {
                *w -= step * v;
            }
            model.bias -= step;
        }
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        if self.models.len() == 1 {
            let p = sigmoid(self.models[0].score(x));
            let mut out = vec![0.0; self.n_classes.max(2)];
            out[0] = 1.0 - p;
            out[1] = p;
            out.truncate(self.n_classes.max(1));
            return normalize(out);
        }
        normalize(self.models.iter().map(|m| sigmoid(m.score(x))).collect())
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn clone_box(&self) -> Box<dyn Classifier> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "LogisticRegression"
    }
}

/// Mistake-driven perceptron: on an error the weights move by `y·x` with
/// `y ∈ {-1, +1}`. Multiclass tasks use one-vs-rest.
#[derive(Debug, Clone)]
pub struct Perceptron {
    n_classes: usize,
    models: Vec<Linear>,
}

impl Perceptron {
    pub fn new(n_classes: usize) -> Self {
        let n_models = if n_classes <= 2 { 1 } else { n_classes };
        Self {
            n_classes,
            models: vec![Linear::default(); n_models],
        }
    }

    pub fn weights(&self) -> (&[f64], f64) {
        (&self.models[0].weights, self.models[0].bias)
    }
}

impl Classifier for Perceptron {
    fn learn_weighted(&mut self, x: &[f64], y: ClassId, weight: f64) {
        if y >= self.n_classes {
            return;
        }
        let binary = self.models.len() == 1;
        for _ in 0..repeat_count(weight) {
            for (c, model) in self.models.iter_mut().enumerate() {
                model.fit_dim(x.len());
                let target = if binary { y == 1 } else { y == c };
                let predicted = model.score(x) > 0.0;
                if predicted != target {
                    let sign = if target { 1.0 } else { -1.0 };
                    for (w, v) in model.weights.iter_mut().zip(x) {
                        *w += sign * v;
                    }
                    model.bias += sign;
                }
            }
        }
    }

    fn predict_proba_one(&self, x: &[f64]) -> Vec<f64> {
        if self.models.len() == 1 {
            let p = sigmoid(self.models[0].score(x));
            let mut out = vec![1.0 - p, p];
            out.truncate(self.n_classes.max(1));
            return normalize(out);
        }
        normalize(self.models.iter().map(|m| sigmoid(m.score(x))).collect())
    }

    fn predict_one(&self, x: &[f64]) -> ClassId {
        if self.models.len() == 1 {
            return usize::from(self.models[0].score(x) > 0.0);
        }
        crate::learners::argmax(&self.predict_proba_one(x))
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn clone_box(&self) -> Box<dyn Classifier> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "Perceptron"
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn perceptron_mistake_update() {
        let mut p = Perceptron::new(2);
        p.learn_one(&[1.0, 2.0], 1);
        assert_eq!(p.weights(), (&[1.0, 2.0][..], 1.0));
        // A correct prediction leaves the weights alone.
        p.learn_one(&[1.0, 2.0], 1);
        assert_eq!(p.weights(), (&[1.0, 2.0][..], 1.0));
        p.learn_one(&[3.0, 0.0], 0);
        assert_eq!(p.weights(), (&[-2.0, 2.0][..], 0.0));
    }

    #[test]
    fn perceptron_converges_on_separable_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<(Vec<f64>, usize)> = (0..2_000)
            .map(|_| {
                let x = vec![rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0)];
                let margin = x[0] + 0.5 * x[1];
                (x, usize::from(margin > 0.0))
            })
            .filter(|(x, _)| (x[0] + 0.5 * x[1]).abs() > 0.1)
            .collect();
        let mut p = Perceptron::new(2);
        for _ in 0..50 {
            for (x, y) in &data {
                p.learn_one(x, *y);
            }
        }
        assert!(data.iter().all(|(x, y)| p.predict_one(x) == *y));
    }

    #[test]
    fn logistic_gradient_step() {
        let mut lr = LogisticRegression::new(2);
        lr.learn_one(&[2.0], 1);
        // sigmoid(0) = 0.5, gradient -0.5 per unit input.
        let (w, b) = lr.weights();
        assert!((w[0] - 0.01).abs() < 1e-12);
        assert!((b - 0.005).abs() < 1e-12);
    }

    #[test]
    fn multiclass_one_vs_rest() {
        let mut lr = LogisticRegression::with_learning_rate(3, 0.5);
        let centres = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        for _ in 0..200 {
            for (c, centre) in centres.iter().enumerate() {
                lr.learn_one(centre, c);
            }
        }
        for (c, centre) in centres.iter().enumerate() {
            assert_eq!(lr.predict_one(centre), c);
        }
    }
}
