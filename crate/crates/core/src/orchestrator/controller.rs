use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;
use std::thread::JoinHandle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ensemble::{ensemble_name, majority};
use super::{Event, EventKind, OamlConfig, Step, Strategy};
use crate::drift::{DriftDetector, Verdict};
use crate::error::{Error, Result};
use crate::eval::{score_on_window, MetricKind, PrequentialMetric, Source, TraceRecord};
use crate::pipeline::Model;
use crate::search::{run_search, SearchLogEntry, SearchOutcome, SearchSpace};
use crate::stream::{ClassId, Instance};

type Probe = Box<dyn FnMut(&Step) + Send>;
type PendingSearch<G> = JoinHandle<Result<SearchOutcome<G>>>;

struct Slot<G> {
    model: Box<dyn Model>,
    genotype: G,
    /// Latest window score.
    score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Active {
    Single(u64),
    /// Snapshot of the backup ensemble taken when it was selected.
    Ensemble(Vec<u64>),
}

impl Active {
    fn ids(&self) -> &[u64] {
        match self {
            Self::Single(id) => std::slice::from_ref(id),
            Self::Ensemble(ids) => ids,
        }
    }
}

struct Pending<G> {
    handle: PendingSearch<G>,
    window: Vec<Instance>,
    started_at: u64,
}

/// What one online sample produced.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub record: TraceRecord,
    pub events: Vec<Event>,
    pub search_log: Vec<SearchLogEntry>,
}

/// Events and search log entries from the initial search.
#[derive(Debug, Clone, Default)]
pub struct Preamble {
    pub events: Vec<Event>,
    pub search_log: Vec<SearchLogEntry>,
}

/// The online AutoML controller.
///
/// Call [`Oaml::initialize`] with the first `n_0` samples, then
/// [`Oaml::process`] for every later sample.
pub struct Oaml<S: SearchSpace + 'static> {
    space: Arc<S>,
    config: OamlConfig,
    n_classes: usize,
    arena: BTreeMap<u64, Slot<S::Genotype>>,
    next_id: u64,
    ensemble: VecDeque<u64>,
    store: Vec<u64>,
    active: Option<Active>,
    source: Source,
    active_label: String,
    detector: Box<dyn DriftDetector>,
    metric: PrequentialMetric,
    buffer: VecDeque<Instance>,
    last_training: u64,
    seeds: ChaCha8Rng,
    incumbent: Option<S::Genotype>,
    pending: Option<Pending<S::Genotype>>,
    probe: Option<Probe>,
    drifts: usize,
    scheduled_retrains: usize,
    searches: usize,
    model_switches: usize,
    fallbacks: usize,
}

impl<S: SearchSpace + 'static> Oaml<S> {
    pub fn new(space: Arc<S>, config: OamlConfig, n_classes: usize) -> Result<Self> {
        config.validate()?;
        if n_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
        }
        let detector = config.detector.build();
        Ok(Self {
            space,
            n_classes,
            arena: BTreeMap::new(),
            next_id: 0,
            ensemble: VecDeque::new(),
            store: Vec::new(),
            active: None,
            source: Source::AutoML,
            active_label: String::new(),
            detector,
            metric: PrequentialMetric::new(MetricKind::Accuracy),
            buffer: VecDeque::with_capacity(config.n_s),
            last_training: 0,
            seeds: ChaCha8Rng::seed_from_u64(config.seed),
            incumbent: None,
            pending: None,
            probe: None,
            drifts: 0,
            scheduled_retrains: 0,
            searches: 0,
            model_switches: 0,
            fallbacks: 0,
            config,
        })
    }

    /// Replaces the detector built from the config.
    pub fn with_detector(mut self, detector: Box<dyn DriftDetector>) -> Self {
        self.detector = detector;
        self
    }

    pub fn set_probe(&mut self, probe: impl FnMut(&Step) + Send + 'static) {
        self.probe = Some(Box::new(probe));
    }

    fn emit(&mut self, step: Step) {
        if let Some(p) = self.probe.as_mut() {
            p(&step);
        }
    }

    pub fn config(&self) -> &OamlConfig {
        &self.config
    }

    /// Runs the initial search on the first `n_0` samples and installs its
    /// champion as the online model.
    pub fn initialize(&mut self, initial: &[Instance]) -> Result<Preamble> {
        if self.active.is_some() {
            return Err(Error::Config("controller already initialized".into()));
        }
        if initial.len() < self.config.n_0 {
            return Err(Error::Config(format!(
                "stream has {} samples, fewer than n_0 = {}",
                initial.len(),
                self.config.n_0
            )));
        }
        let initial = &initial[..self.config.n_0];
        for inst in initial {
            inst.require_label()?;
        }
        let last = initial.last().map_or(0, |i| i.index);
        let mut pre = Preamble::default();
        pre.events.push(Event {
            index: last,
            kind: EventKind::SearchStarted,
            detail: format!("initial search on {} samples", initial.len()),
        });
        self.emit(Step::SearchStarted { index: last });
        let seed = self.seeds.random();
        let outcome = self.search(initial, seed)?;
        self.emit(Step::SearchFinished { index: last });
        pre.events.push(self.finished_event(last, &outcome));
        pre.search_log = outcome.log;
        if outcome.fallback {
            self.fallbacks += 1;
        }
        self.incumbent = Some(outcome.genotype.clone());
        let id = self.insert(outcome.model, outcome.genotype, outcome.window_score);
        match self.config.strategy {
            Strategy::Basic => {}
            Strategy::Ensemble => self.ensemble.push_back(id),
            Strategy::ModelStore => self.store.push(id),
        }
        self.active = Some(Active::Single(id));
        self.source = Source::AutoML;
        self.active_label = self.describe_active();
        let start = initial.len().saturating_sub(self.config.n_s);
        self.buffer.extend(initial[start..].iter().cloned());
        self.last_training = last;
        Ok(pre)
    }

    /// Test-then-train on one online sample, re-searching when triggered.
    pub fn process(&mut self, inst: &Instance) -> Result<StepOutput> {
        if self.active.is_none() {
            return Err(Error::Config("controller used before initialize".into()));
        }
        let truth = inst.require_label()?;
        let mut events = Vec::new();
        let mut search_log = Vec::new();
        if self.pending.as_ref().is_some_and(|p| p.handle.is_finished()) {
            let pending = self.pending.take().expect("checked above");
            self.install_pending(pending, inst.index, &mut events, &mut search_log)?;
        }

        let source = self.source;
        let classifier = self.active_label.clone();
        let prediction = self.predict_active(&inst.features)?;
        self.emit(Step::Predict { index: inst.index });
        self.metric.update(truth, prediction);
        self.emit(Step::MetricUpdate { index: inst.index });
        for id in self.training_ids() {
            let slot = self.arena.get_mut(&id).expect("live id");
            slot.model.learn_one(&inst.features, truth)?;
        }
        self.emit(Step::Train { index: inst.index });
        if self.buffer.len() == self.config.n_s {
            self.buffer.pop_front();
        }
        self.buffer.push_back(inst.clone());

        let verdict = self.detector.update(prediction != truth);
        self.emit(Step::DetectorUpdate {
            index: inst.index,
            verdict,
        });
        let drift = verdict == Verdict::Drift;
        let scheduled = self
            .config
            .max_train
            .is_some_and(|m| inst.index.saturating_sub(self.last_training) >= m);
        if drift {
            self.drifts += 1;
            events.push(Event {
                index: inst.index,
                kind: EventKind::Drift,
                detail: self.detector.name().to_string(),
            });
        }
        let mut retrain = false;
        if (drift || scheduled) && self.pending.is_none() {
            retrain = true;
            if !drift {
                self.scheduled_retrains += 1;
                events.push(Event {
                    index: inst.index,
                    kind: EventKind::ScheduledRetrain,
                    detail: format!("{} samples since last training", inst.index - self.last_training),
                });
            }
            self.last_training = inst.index;
            self.start_search(inst.index, &mut events, &mut search_log)?;
        }

        let record = TraceRecord {
            index: inst.index,
            prediction,
            truth,
            acc_cum: self.metric.accuracy(),
            acc_win: self.metric.windowed_accuracy(),
            verdict,
            source,
            retrain,
            classifier,
        };
        Ok(StepOutput {
            record,
            events,
            search_log,
        })
    }

    /// Waits for a running background search. Its champion is not installed
    /// because no samples remain.
    pub fn finish(&mut self, index: u64) -> Vec<Event> {
        let Some(pending) = self.pending.take() else {
            return Vec::new();
        };
        let detail = match pending.handle.join() {
            Ok(Ok(outcome)) => format!("{} discarded at stream end", self.space.describe(&outcome.genotype)),
            Ok(Err(e)) => format!("failed: {e}"),
            Err(_) => "search thread panicked".to_string(),
        };
        vec![Event {
            index,
            kind: EventKind::SearchFinished,
            detail,
        }]
    }

    fn search(&self, window: &[Instance], seed: u64) -> Result<SearchOutcome<S::Genotype>> {
        run_search(
            &*self.space,
            window,
            self.n_classes,
            &self.config.search,
            &self.config.budget(),
            seed,
            self.incumbent.as_ref(),
        )
    }

    fn finished_event(&self, index: u64, outcome: &SearchOutcome<S::Genotype>) -> Event {
        let fallback = if outcome.fallback { " (fallback)" } else { "" };
        Event {
            index,
            kind: EventKind::SearchFinished,
            detail: format!(
                "{}{} score {:.6} after {} evaluations",
                self.space.describe(&outcome.genotype),
                fallback,
                outcome.window_score,
                outcome.results.len()
            ),
        }
    }

    fn start_search(&mut self, index: u64, events: &mut Vec<Event>, log: &mut Vec<SearchLogEntry>) -> Result<()> {
        self.searches += 1;
        let window: Vec<Instance> = self.buffer.iter().cloned().collect();
        events.push(Event {
            index,
            kind: EventKind::SearchStarted,
            detail: format!("search on {} samples", window.len()),
        });
        self.emit(Step::SearchStarted { index });
        let seed = self.seeds.random();
        if self.config.async_search {
            let space = Arc::clone(&self.space);
            let snapshot = window.clone();
            let n_classes = self.n_classes;
            let search = self.config.search;
            let budget = self.config.budget();
            let incumbent = self.incumbent.clone();
            let handle = std::thread::spawn(move || {
                run_search(&*space, &snapshot, n_classes, &search, &budget, seed, incumbent.as_ref())
            });
            self.pending = Some(Pending {
                handle,
                window,
                started_at: index,
            });
            return Ok(());
        }
        let outcome = self.search(&window, seed)?;
        self.emit(Step::SearchFinished { index });
        self.adapt(outcome, &window, index, events, log)
    }

    fn install_pending(
        &mut self,
        pending: Pending<S::Genotype>,
        index: u64,
        events: &mut Vec<Event>,
        log: &mut Vec<SearchLogEntry>,
    ) -> Result<()> {
        let outcome = match pending.handle.join() {
            Ok(result) => result?,
            Err(_) => return Err(Error::Model("background search panicked".into())),
        };
        self.emit(Step::SearchFinished { index });
        let mut out = Vec::new();
        self.adapt(outcome, &pending.window, index, &mut out, log)?;
        for e in &mut out {
            if e.kind == EventKind::SearchFinished {
                e.detail = format!("{} (started at {})", e.detail, pending.started_at);
            }
        }
        events.extend(out);
        Ok(())
    }

    /// Applies the configured strategy to a search outcome.
    fn adapt(
        &mut self,
        outcome: SearchOutcome<S::Genotype>,
        window: &[Instance],
        index: u64,
        events: &mut Vec<Event>,
        log: &mut Vec<SearchLogEntry>,
    ) -> Result<()> {
        events.push(self.finished_event(index, &outcome));
        log.extend(outcome.log.iter().cloned());
        if outcome.fallback {
            self.fallbacks += 1;
        }
        self.incumbent = Some(outcome.genotype.clone());
        let champion_score = outcome.window_score;
        let champion = self.insert(outcome.model, outcome.genotype, champion_score);
        let kind = self.config.search.metric;
        let previous = (self.active.clone(), self.source);

        match self.config.strategy {
            Strategy::Basic => {
                self.active = Some(Active::Single(champion));
                self.source = Source::AutoML;
                self.emit(Step::Selected {
                    source: Source::AutoML,
                    id: Some(champion),
                });
            }
            Strategy::Ensemble => {
                let members: Vec<u64> = self.ensemble.iter().copied().collect();
                let ensemble_score = self.score_ensemble(&members, window, kind)?;
                self.emit(Step::Compared {
                    ensemble: ensemble_score,
                    champion: champion_score,
                });
                // Losses are negated scores, so the comparison reads as a minimization.
                let (loss_e, loss_p) = (-ensemble_score, -champion_score);
                if loss_e <= loss_p {
                    self.active = Some(Active::Ensemble(members));
                    self.source = Source::Ensemble;
                    self.emit(Step::Selected {
                        source: Source::Ensemble,
                        id: None,
                    });
                } else {
                    self.active = Some(Active::Single(champion));
                    self.source = Source::AutoML;
                    self.emit(Step::Selected {
                        source: Source::AutoML,
                        id: Some(champion),
                    });
                }
                self.ensemble.push_back(champion);
                self.emit(Step::Appended { id: champion });
                if self.ensemble.len() > self.config.k {
                    let oldest = self.ensemble.pop_front().expect("non-empty");
                    self.emit(Step::Popped { id: oldest });
                }
            }
            Strategy::ModelStore => {
                let mut best = (champion, champion_score, Source::AutoML);
                for id in self.store.clone() {
                    let slot = self.arena.get_mut(&id).expect("live id");
                    let score = score_on_window(&mut *slot.model, window, true, kind)?;
                    slot.score = score;
                    self.emit(Step::Rescored { id, score });
                    if score > best.1 {
                        best = (id, score, Source::ModelStore);
                    }
                }
                self.active = Some(Active::Single(best.0));
                self.source = best.2;
                self.emit(Step::Selected {
                    source: best.2,
                    id: Some(best.0),
                });
                self.store.push(champion);
                self.emit(Step::Appended { id: champion });
                if self.store.len() > self.config.k {
                    let mut worst = 0;
                    for (pos, id) in self.store.iter().enumerate() {
                        if self.arena[id].score < self.arena[&self.store[worst]].score {
                            worst = pos;
                        }
                    }
                    let evicted = self.store.remove(worst);
                    self.emit(Step::Evicted { id: evicted });
                }
            }
        }

        self.active_label = self.describe_active();
        if (self.active.clone(), self.source) != previous {
            self.model_switches += 1;
            events.push(Event {
                index,
                kind: EventKind::ModelSwitch,
                detail: format!("{} {}", self.source.as_str(), self.active_label),
            });
        }
        self.collect_garbage();
        Ok(())
    }

    fn score_ensemble(&self, members: &[u64], window: &[Instance], kind: MetricKind) -> Result<f64> {
        let copies = members.iter().map(|id| self.arena[id].model.clone_model()).collect();
        let mut ensemble = super::EnsembleModel::new(copies);
        score_on_window(&mut ensemble, window, false, kind)
    }

    fn insert(&mut self, model: Box<dyn Model>, genotype: S::Genotype, score: f64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.arena.insert(id, Slot { model, genotype, score });
        id
    }

    fn collect_garbage(&mut self) {
        let live: BTreeSet<u64> = self
            .active
            .iter()
            .flat_map(|a| a.ids().iter().copied())
            .chain(self.ensemble.iter().copied())
            .chain(self.store.iter().copied())
            .collect();
        self.arena.retain(|id, _| live.contains(id));
    }

    fn training_ids(&self) -> Vec<u64> {
        if self.config.train_inactive {
            return self.arena.keys().copied().collect();
        }
        self.active.as_ref().map_or_else(Vec::new, |a| a.ids().to_vec())
    }

    fn predict_active(&self, x: &[f64]) -> Result<ClassId> {
        match self.active.as_ref().expect("initialized") {
            Active::Single(id) => self.arena[id].model.predict_one(x),
            Active::Ensemble(ids) => {
                let predictions = ids
                    .iter()
                    .map(|id| self.arena[id].model.predict_one(x))
                    .collect::<Result<Vec<_>>>()?;
                majority(&predictions)
            }
        }
    }

    /// Name of the active predictor, as written to the trace.
    pub fn active_name(&self) -> &str {
        &self.active_label
    }

    fn describe_active(&self) -> String {
        match self.active.as_ref() {
            None => String::new(),
            Some(Active::Single(id)) => self.space.describe(&self.arena[id].genotype),
            Some(Active::Ensemble(ids)) => {
                let names: Vec<String> = ids.iter().map(|id| self.space.describe(&self.arena[id].genotype)).collect();
                ensemble_name(names.iter().map(String::as_str))
            }
        }
    }

    /// A copy of the active predictor.
    pub fn active_model(&self) -> Option<Box<dyn Model>> {
        match self.active.as_ref()? {
            Active::Single(id) => Some(self.arena[id].model.clone_model()),
            Active::Ensemble(ids) => Some(Box::new(super::EnsembleModel::new(
                ids.iter().map(|id| self.arena[id].model.clone_model()).collect(),
            ))),
        }
    }

    /// Model ids of the active predictor.
    pub fn active_ids(&self) -> Vec<u64> {
        self.active.as_ref().map_or_else(Vec::new, |a| a.ids().to_vec())
    }

    pub fn source(&self) -> Source {
        self.source
    }

    /// Backup ensemble member ids, oldest first.
    pub fn ensemble_ids(&self) -> Vec<u64> {
        self.ensemble.iter().copied().collect()
    }

    /// Model store entries as `(id, latest score)`, in insertion order.
    pub fn store_entries(&self) -> Vec<(u64, f64)> {
        self.store.iter().map(|id| (*id, self.arena[id].score)).collect()
    }

    pub fn genotype(&self, id: u64) -> Option<&S::Genotype> {
        self.arena.get(&id).map(|s| &s.genotype)
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn last_training(&self) -> u64 {
        self.last_training
    }

    pub fn metric(&self) -> &PrequentialMetric {
        &self.metric
    }

    pub fn drifts(&self) -> usize {
        self.drifts
    }

    pub fn scheduled_retrains(&self) -> usize {
        self.scheduled_retrains
    }

    /// Re-searches started after the initial one.
    pub fn searches(&self) -> usize {
        self.searches
    }

    pub fn model_switches(&self) -> usize {
        self.model_switches
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn search_pending(&self) -> bool {
        self.pending.is_some()
    }
}
