//! Budgeted pipeline search over a sliding window.
//!
//! A coordinator asks a scheduler (random search, ASHA or a steady-state
//! evolutionary algorithm) for the next candidate, hands it to one of
//! `worker_count` workers, and feeds completed results back to the
//! scheduler. Only the coordinator touches scheduler state. With a single
//! worker everything runs inline and is fully reproducible.

mod pool;
mod schedulers;
mod space;

use std::fmt;
use std::io::Write;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{prequential_step, MetricKind, PrequentialMetric};
use crate::pipeline::Model;
use crate::stream::Instance;

pub use self::pool::evaluate_candidate;
pub use self::schedulers::{asha_rungs, Asha, Evolution, Job, RandomSearch, Scheduler};
pub use self::space::{
    build_classifier, build_pipeline, build_preprocessor, classifier_specs, preprocessor_specs,
    Component, ComponentSpec, ConfigSpace, Domain, ParamSpec, PipelineGenotype, Provenance,
    SpaceOverrides, Value, MAX_PREPROCESSORS,
};

/// Shape of the learning problem a pipeline is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub n_features: usize,
    pub n_classes: usize,
}

/// A space of candidate models with genetic operators.
///
/// [`ConfigSpace`] is the real pipeline grid; tests plug in small spaces
/// with planted optima.
pub trait SearchSpace: Send + Sync {
    type Genotype: Clone + Send + Sync + fmt::Debug + PartialEq + 'static;

    fn sample(&self, rng: &mut ChaCha8Rng) -> Self::Genotype;
    fn mutate(&self, g: &Self::Genotype, rng: &mut ChaCha8Rng) -> Self::Genotype;
    fn crossover(&self, a: &Self::Genotype, b: &Self::Genotype, rng: &mut ChaCha8Rng)
        -> Self::Genotype;
    fn validate(&self, g: &Self::Genotype) -> Result<()>;
    fn build(&self, g: &Self::Genotype, task: &Task, seed: u64) -> Result<Box<dyn Model>>;
    /// Used when no candidate completes.
    fn default_genotype(&self) -> Self::Genotype;
    fn describe(&self, g: &Self::Genotype) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub t_max: Option<Duration>,
    pub max_evaluations: Option<usize>,
    pub worker_count: usize,
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.t_max.is_none() && self.max_evaluations.is_none() {
            return Err(Error::Config(
                "search budget needs t_max or max_evaluations".into(),
            ));
        }
        if self.worker_count == 0 {
            return Err(Error::Config("worker_count must be at least 1".into()));
        }
        if self.max_evaluations == Some(0) {
            return Err(Error::Config("max_evaluations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Random,
    Asha,
    Evolutionary,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Asha => "asha",
            Self::Evolutionary => "evolutionary",
        }
    }
}

/// Strategy choice and its knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub metric: MetricKind,
    /// ASHA reduction factor.
    pub eta: f64,
    /// Smallest ASHA resource; `window / eta^3` when unset.
    pub min_resource: Option<usize>,
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Seed the EA population with the current champion.
    pub warm_start: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Evolutionary,
            metric: MetricKind::Accuracy,
            eta: 2.0,
            min_resource: None,
            population_size: 20,
            tournament_size: 3,
            crossover_rate: 0.3,
            warm_start: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0) {
            return Err(Error::Config(format!("eta must exceed 1, got {}", self.eta)));
        }
        if self.min_resource == Some(0) {
            return Err(Error::Config("min_resource must be at least 1".into()));
        }
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament_size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config("crossover_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EvaluationResult<G> {
    pub genotype: G,
    /// Seed the candidate's model was built with.
    pub seed: u64,
    /// Cumulative prequential metric; 0 for failures.
    pub score: f64,
    pub samples_used: usize,
    /// ASHA rung or EA generation.
    pub rung: usize,
    pub duration: Duration,
    /// Time since the search started when the evaluation finished.
    pub finished_at: Duration,
    /// Completion order, used to break score ties.
    pub order: usize,
    pub error: Option<String>,
}

impl<G> EvaluationResult<G> {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Best successful result; ties go to the earlier completion.
pub fn best_result<'a, G>(
    results: impl IntoIterator<Item = &'a EvaluationResult<G>>,
) -> Option<&'a EvaluationResult<G>>
where
    G: 'a,
{
    results
        .into_iter()
        .filter(|r| !r.failed())
        .fold(None, |best: Option<&EvaluationResult<G>>, r| match best {
            Some(b) if b.score > r.score || (b.score == r.score && b.order < r.order) => Some(b),
            _ => Some(r),
        })
}

/// One row of the search telemetry log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchLogEntry {
    pub wall_time: f64,
    pub strategy: &'static str,
    pub genotype: String,
    pub rung_or_generation: usize,
    pub score: f64,
    pub error: Option<String>,
}

pub const SEARCH_LOG_HEADER: [&str; 6] = [
    "wall_time",
    "strategy",
    "genotype",
    "rung_or_generation",
    "score",
    "error",
];

pub struct SearchLogWriter<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> SearchLogWriter<W> {
    pub fn new(inner: W) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(SEARCH_LOG_HEADER)?;
        Ok(Self { writer })
    }

    pub fn write(&mut self, e: &SearchLogEntry) -> Result<()> {
        self.writer.write_record([
            format!("{:.3}", e.wall_time),
            e.strategy.to_string(),
            e.genotype.clone(),
            e.rung_or_generation.to_string(),
            format!("{:.6}", e.score),
            e.error.clone().unwrap_or_default(),
        ])?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::Csv(e.into()))
    }
}

/// What a search hands back to the online loop.
pub struct SearchOutcome<G> {
    pub genotype: G,
    /// The champion rebuilt and trained prequentially on the full window.
    pub model: Box<dyn Model>,
    /// Score of that training pass.
    pub window_score: f64,
    /// Set when no candidate succeeded and the default genotype was used.
    pub fallback: bool,
    pub results: Vec<EvaluationResult<G>>,
    pub log: Vec<SearchLogEntry>,
    pub elapsed: Duration,
}

impl<G> fmt::Debug for SearchOutcome<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SearchOutcome")
            .field("model", &self.model.name())
            .field("window_score", &self.window_score)
            .field("fallback", &self.fallback)
            .field("evaluations", &self.results.len())
            .finish()
    }
}

/// Trains a fresh model prequentially on the whole window.
fn train_on_window<S: SearchSpace>(
    space: &S,
    g: &S::Genotype,
    task: &Task,
    seed: u64,
    window: &[Instance],
    kind: MetricKind,
) -> Result<(Box<dyn Model>, f64)> {
    let mut model = space.build(g, task, seed)?;
    let mut metric = PrequentialMetric::new(kind);
    for inst in window {
        prequential_step(&mut *model, &mut metric, inst)?;
    }
    Ok((model, metric.value()))
}

/// Runs one search on `window` and returns the trained champion.
pub fn run_search<S: SearchSpace>(
    space: &S,
    window: &[Instance],
    n_classes: usize,
    config: &SearchConfig,
    budget: &SearchBudget,
    seed: u64,
    incumbent: Option<&S::Genotype>,
) -> Result<SearchOutcome<S::Genotype>> {
    config.validate()?;
    budget.validate()?;
    let first = window.first().ok_or(Error::EmptyWindow)?;
    let task = Task {
        n_features: first.features.len(),
        n_classes,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scheduler: Box<dyn Scheduler<S>> = match config.algorithm {
        Algorithm::Random => Box::new(RandomSearch::new(window.len())),
        Algorithm::Asha => Box::new(Asha::new(
            asha_rungs(window.len(), config.eta, config.min_resource),
            config.eta,
        )),
        Algorithm::Evolutionary => {
            let warm = if config.warm_start { incumbent.cloned() } else { None };
            Box::new(Evolution::new(
                window.len(),
                config.population_size,
                config.tournament_size,
                config.crossover_rate,
                warm,
            ))
        }
    };
    let start = std::time::Instant::now();
    let results = pool::drive(space, window, &task, config.metric, budget, &mut *scheduler, &mut rng);
    let log = results
        .iter()
        .map(|r| SearchLogEntry {
            wall_time: r.finished_at.as_secs_f64(),
            strategy: config.algorithm.as_str(),
            genotype: space.describe(&r.genotype),
            rung_or_generation: r.rung,
            score: r.score,
            error: r.error.clone(),
        })
        .collect();

    let champion = scheduler.champion(&results).map(|r| (r.genotype.clone(), r.seed));
    let trained = champion
        .as_ref()
        .and_then(|(g, s)| train_on_window(space, g, &task, *s, window, config.metric).ok());
    let (genotype, (model, window_score), fallback) = match (champion, trained) {
        (Some((g, _)), Some(trained)) => (g, trained, false),
        _ => {
            let g = space.default_genotype();
            let trained = train_on_window(space, &g, &task, rng.random(), window, config.metric)?;
            (g, trained, true)
        }
    };
    Ok(SearchOutcome {
        genotype,
        model,
        window_score,
        fallback,
        results,
        log,
        elapsed: start.elapsed(),
    })
}
