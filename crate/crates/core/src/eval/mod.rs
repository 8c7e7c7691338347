//! Prequential (test-then-train) evaluation.

mod trace;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::Model;
use crate::stream::{ClassId, Instance};

pub use self::trace::{Decimation, Source, TraceRecord, TraceWriter, TRACE_HEADER};

/// Size of the sliding accuracy window logged next to the cumulative value.
pub const DEFAULT_WINDOW: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Accuracy,
    /// Mean per-class recall over the classes seen so far.
    BalancedAccuracy,
    /// Unweighted mean of per-class F1 over the classes seen so far.
    MacroF1,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accuracy => "accuracy",
            Self::BalancedAccuracy => "balanced_accuracy",
            Self::MacroF1 => "macro_f1",
        }
    }
}

/// Running confusion counts plus a ring of recent 0/1 outcomes.
#[derive(Debug, Clone)]
pub struct PrequentialMetric {
    kind: MetricKind,
    /// `confusion[truth][prediction]`, grown on demand.
    confusion: Vec<Vec<u64>>,
    correct: u64,
    total: u64,
    window: VecDeque<bool>,
    window_capacity: usize,
    window_correct: usize,
}

impl PrequentialMetric {
    pub fn new(kind: MetricKind) -> Self {
        Self::with_window(kind, DEFAULT_WINDOW)
    }

    pub fn with_window(kind: MetricKind, window_capacity: usize) -> Self {
        Self {
            kind,
            confusion: Vec::new(),
            correct: 0,
            total: 0,
            window: VecDeque::with_capacity(window_capacity),
            window_capacity: window_capacity.max(1),
            window_correct: 0,
        }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn update(&mut self, truth: ClassId, prediction: ClassId) {
        let size = truth.max(prediction) + 1;
        if self.confusion.len() < size {
            self.confusion.resize(size, Vec::new());
            for row in &mut self.confusion {
                row.resize(size, 0);
            }
        }
        self.confusion[truth][prediction] += 1;
        let hit = truth == prediction;
        self.correct += u64::from(hit);
        self.total += 1;
        if self.window.len() == self.window_capacity && self.window.pop_front() == Some(true) {
            self.window_correct -= 1;
        }
        self.window.push_back(hit);
        self.window_correct += usize::from(hit);
    }

    pub fn correct(&self) -> u64 {
        self.correct
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    /// Accuracy over the last `window_capacity` outcomes.
    pub fn windowed_accuracy(&self) -> f64 {
        if self.window.is_empty() {
            0.0
        } else {
            self.window_correct as f64 / self.window.len() as f64
        }
    }

    /// Cumulative value of the configured metric; higher is better.
    pub fn value(&self) -> f64 {
        match self.kind {
            MetricKind::Accuracy => self.accuracy(),
            MetricKind::BalancedAccuracy => {
                let recalls: Vec<f64> = self
                    .confusion
                    .iter()
                    .enumerate()
                    .filter_map(|(c, row)| {
                        let support: u64 = row.iter().sum();
                        (support > 0).then(|| row[c] as f64 / support as f64)
                    })
                    .collect();
                mean(&recalls)
            }
            MetricKind::MacroF1 => {
                let n = self.confusion.len();
                let f1: Vec<f64> = (0..n)
                    .filter_map(|c| {
                        let tp = self.confusion[c][c] as f64;
                        let support: u64 = self.confusion[c].iter().sum();
                        let predicted: u64 = self.confusion.iter().map(|r| r[c]).sum();
                        if support == 0 && predicted == 0 {
                            return None;
                        }
                        let denom = support as f64 + predicted as f64;
                        Some(if denom > 0.0 { 2.0 * tp / denom } else { 0.0 })
                    })
                    .collect();
                mean(&f1)
            }
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Predicts, scores, then trains, in that order. Returns the prediction.
pub fn prequential_step(
    model: &mut dyn Model,
    metric: &mut PrequentialMetric,
    instance: &Instance,
) -> Result<ClassId> {
    let truth = instance.require_label()?;
    let prediction = model.predict_one(&instance.features)?;
    metric.update(truth, prediction);
    model.learn_one(&instance.features, truth)?;
    Ok(prediction)
}

/// Prequential score of `model` over `window`.
///
/// With `clone` set the pass runs on a copy and `model` is untouched;
/// otherwise `model` is trained on the window as a side effect.
pub fn score_on_window(
    model: &mut dyn Model,
    window: &[Instance],
    clone: bool,
    kind: MetricKind,
) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut metric = PrequentialMetric::new(kind);
    if clone {
        let mut copy = model.clone_model();
        for inst in window {
            prequential_step(&mut *copy, &mut metric, inst)?;
        }
    } else {
        for inst in window {
            prequential_step(model, &mut metric, inst)?;
        }
    }
    Ok(metric.value())
}
