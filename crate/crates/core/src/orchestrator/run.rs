use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::{Event, EventKind, Oaml, OamlConfig};
use crate::drift::{DetectorKind, Verdict};
use crate::error::{Error, Result};
use crate::eval::{MetricKind, PrequentialMetric, Source, TraceRecord};
use crate::pipeline::Model;
use crate::search::{SearchLogEntry, SearchSpace};
use crate::stream::Instance;

/// Receives run output as it is produced.
pub trait RunSink {
    fn record(&mut self, record: &TraceRecord) -> Result<()>;
    fn event(&mut self, event: &Event) -> Result<()>;
    fn search_log(&mut self, entry: &SearchLogEntry) -> Result<()>;
}

/// Keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    pub records: Vec<TraceRecord>,
    pub events: Vec<Event>,
    pub search_log: Vec<SearchLogEntry>,
}

impl RunSink for MemorySink {
    fn record(&mut self, record: &TraceRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }

    fn event(&mut self, event: &Event) -> Result<()> {
        self.events.push(event.clone());
        Ok(())
    }

    fn search_log(&mut self, entry: &SearchLogEntry) -> Result<()> {
        self.search_log.push(entry.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub method: String,
    pub online_samples: u64,
    pub final_acc_cum: f64,
    pub final_acc_win: f64,
    pub drifts: usize,
    pub scheduled_retrains: usize,
    pub searches: usize,
    pub model_switches: usize,
    pub fallbacks: usize,
    pub wall_clock_secs: f64,
    pub final_source: String,
    pub final_classifier: String,
    pub detector: String,
}

fn take_initial(
    stream: &mut impl Iterator<Item = Result<Instance>>,
    n_0: usize,
) -> Result<Vec<Instance>> {
    let mut initial = Vec::with_capacity(n_0);
    for inst in stream.by_ref().take(n_0) {
        initial.push(inst?);
    }
    if initial.len() < n_0 {
        return Err(Error::Config(format!(
            "stream has {} samples, fewer than n_0 = {n_0}",
            initial.len()
        )));
    }
    Ok(initial)
}

/// Runs the controller over a whole stream.
pub fn run_oaml<S: SearchSpace + 'static>(
    space: Arc<S>,
    config: &OamlConfig,
    n_classes: usize,
    stream: impl IntoIterator<Item = Result<Instance>>,
    sink: &mut dyn RunSink,
) -> Result<RunSummary> {
    let start = Instant::now();
    let mut stream = stream.into_iter();
    let initial = take_initial(&mut stream, config.n_0)?;
    let mut oaml = Oaml::new(space, config.clone(), n_classes)?;
    let preamble = oaml.initialize(&initial)?;
    drop(initial);
    for e in &preamble.events {
        sink.event(e)?;
    }
    for entry in &preamble.search_log {
        sink.search_log(entry)?;
    }
    let mut online = 0u64;
    let mut last_index = 0;
    let mut last: Option<TraceRecord> = None;
    for inst in stream {
        let inst = inst?;
        let out = oaml.process(&inst)?;
        online += 1;
        last_index = inst.index;
        for entry in &out.search_log {
            sink.search_log(entry)?;
        }
        for e in &out.events {
            sink.event(e)?;
        }
        sink.record(&out.record)?;
        last = Some(out.record);
    }
    for e in oaml.finish(last_index) {
        sink.event(&e)?;
    }
    let method = format!("oaml-{}", config.strategy.as_str().replace('_', ""));
    Ok(RunSummary {
        method,
        online_samples: online,
        final_acc_cum: last.as_ref().map_or(0.0, |r| r.acc_cum),
        final_acc_win: last.as_ref().map_or(0.0, |r| r.acc_win),
        drifts: oaml.drifts(),
        scheduled_retrains: oaml.scheduled_retrains(),
        searches: oaml.searches(),
        model_switches: oaml.model_switches(),
        fallbacks: oaml.fallbacks(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        final_source: oaml.source().as_str().to_string(),
        final_classifier: oaml.active_name().to_string(),
        detector: config.detector.describe(),
    })
}

/// Trains a fixed model on the first `n_0` samples, then evaluates it
/// test-then-train on the rest. Used for the standalone baselines.
pub fn run_baseline(
    method: &str,
    mut model: Box<dyn Model>,
    n_0: usize,
    stream: impl IntoIterator<Item = Result<Instance>>,
    sink: &mut dyn RunSink,
) -> Result<RunSummary> {
    let start = Instant::now();
    let mut stream = stream.into_iter();
    let initial = take_initial(&mut stream, n_0)?;
    for inst in &initial {
        model.learn_one(&inst.features, inst.require_label()?)?;
    }
    sink.event(&Event {
        index: initial.last().map_or(0, |i| i.index),
        kind: EventKind::SearchFinished,
        detail: format!("{} warmed on {n_0} samples", model.name()),
    })?;
    drop(initial);
    let mut metric = PrequentialMetric::new(MetricKind::Accuracy);
    let classifier = model.name();
    let mut online = 0u64;
    for inst in stream {
        let inst = inst?;
        let truth = inst.require_label()?;
        let prediction = model.predict_one(&inst.features)?;
        metric.update(truth, prediction);
        model.learn_one(&inst.features, truth)?;
        online += 1;
        sink.record(&TraceRecord {
            index: inst.index,
            prediction,
            truth,
            acc_cum: metric.accuracy(),
            acc_win: metric.windowed_accuracy(),
            verdict: Verdict::InControl,
            source: Source::AutoML,
            retrain: false,
            classifier: classifier.clone(),
        })?;
    }
    Ok(RunSummary {
        method: method.to_string(),
        online_samples: online,
        final_acc_cum: metric.accuracy(),
        final_acc_win: metric.windowed_accuracy(),
        drifts: 0,
        scheduled_retrains: 0,
        searches: 0,
        model_switches: 0,
        fallbacks: 0,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        final_source: Source::AutoML.as_str().to_string(),
        final_classifier: classifier,
        detector: DetectorKind::Off.describe(),
    })
}
