//! The online controller: initial search, test-then-train loop, drift-
//! and schedule-triggered re-search, and the three adaptation strategies.

mod controller;
mod ensemble;
mod run;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::drift::{DetectorKind, Verdict};
use crate::error::{Error, Result};
use crate::eval::Source;
use crate::search::{SearchBudget, SearchConfig};

pub use self::controller::{Oaml, Preamble, StepOutput};
pub use self::ensemble::{majority, EnsembleModel};
pub use self::run::{run_baseline, run_oaml, MemorySink, RunSink, RunSummary};

/// How the online model is replaced after a re-search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Always install the new champion.
    Basic,
    /// Pick the better of the backup ensemble and the new champion, then
    /// add the champion to the ensemble, dropping the oldest member.
    Ensemble,
    /// Pick the best of the stored pipelines and the new champion, then
    /// store the champion, dropping the lowest scorer.
    ModelStore,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::Ensemble => "ensemble",
            Self::ModelStore => "model_store",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OamlConfig {
    /// Samples in the initial batch.
    pub n_0: usize,
    /// Sliding window size.
    pub n_s: usize,
    /// Search wall-clock budget in seconds.
    pub t_max: f64,
    /// Optional cap on evaluations per search; makes runs reproducible.
    pub max_evaluations: Option<usize>,
    pub workers: usize,
    /// Online samples between forced re-searches; `None` disables them.
    pub max_train: Option<u64>,
    /// Capacity of the backup ensemble and the model store.
    pub k: usize,
    pub strategy: Strategy,
    pub detector: DetectorKind,
    pub search: SearchConfig,
    pub seed: u64,
    /// Keep predicting with the old model while a search runs.
    pub async_search: bool,
    /// Also train ensemble and store members that are not active.
    pub train_inactive: bool,
}

impl Default for OamlConfig {
    fn default() -> Self {
        Self {
            n_0: 5000,
            n_s: 5000,
            t_max: 600.0,
            max_evaluations: None,
            workers: 1,
            max_train: Some(50_000),
            k: 5,
            strategy: Strategy::Ensemble,
            detector: DetectorKind::Eddm,
            search: SearchConfig::default(),
            seed: 0,
            async_search: false,
            train_inactive: false,
        }
    }
}

impl OamlConfig {
    /// Every violated constraint, empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_s == 0 {
            v.push("n_s must be at least 1".to_string());
        }
        if self.n_0 < self.n_s {
            v.push(format!("n_0 ≥ n_s required (n_0 = {}, n_s = {})", self.n_0, self.n_s));
        }
        if self.k == 0 {
            v.push("k must be at least 1".to_string());
        }
        if self.max_train == Some(0) {
            v.push("max_train must be positive".to_string());
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            v.push(format!("t_max must be a positive number of seconds, got {}", self.t_max));
        }
        if self.workers == 0 {
            v.push("workers must be at least 1".to_string());
        }
        if self.max_evaluations == Some(0) {
            v.push("max_evaluations must be at least 1".to_string());
        }
        if let Err(e) = self.search.validate() {
            v.push(e.to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn budget(&self) -> SearchBudget {
        SearchBudget {
            t_max: Some(Duration::from_secs_f64(self.t_max)),
            max_evaluations: self.max_evaluations,
            worker_count: self.workers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Drift,
    ScheduledRetrain,
    SearchStarted,
    SearchFinished,
    ModelSwitch,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Drift => "drift",
            Self::ScheduledRetrain => "scheduled_retrain",
            Self::SearchStarted => "search_started",
            Self::SearchFinished => "search_finished",
            Self::ModelSwitch => "model_switch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub index: u64,
    pub kind: EventKind,
    pub detail: String,
}

/// Fine-grained controller steps, reported to an optional probe so tests
/// can check their order.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Predict { index: u64 },
    MetricUpdate { index: u64 },
    Train { index: u64 },
    DetectorUpdate { index: u64, verdict: Verdict },
    SearchStarted { index: u64 },
    SearchFinished { index: u64 },
    /// Ensemble strategy: window scores of the backup ensemble and the champion.
    Compared { ensemble: f64, champion: f64 },
    /// Model store strategy: a stored model was re-scored.
    Rescored { id: u64, score: f64 },
    Selected { source: Source, id: Option<u64> },
    Appended { id: u64 },
    /// Ensemble strategy: the oldest member left.
    Popped { id: u64 },
    /// Model store strategy: the lowest scorer left.
    Evicted { id: u64 },
}
