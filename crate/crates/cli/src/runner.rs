//! Executes experiments and writes their artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use oaml::eval::{TraceRecord, TraceWriter};
use oaml::learners::{HatParams, HoeffdingAdaptiveTree, LeveragingBagging, LeveragingParams};
use oaml::orchestrator::{run_baseline, run_oaml, Event, RunSink, RunSummary};
use oaml::pipeline::{Model, Pipeline};
use oaml::search::{ConfigSpace, SearchLogEntry, SearchLogWriter};
use oaml::stream::{load_csv_stream, Instance};
use serde::Serialize;

use crate::config::{ExperimentConfig, Method, StreamSource};
use crate::CliError;

pub const EVENTS_HEADER: [&str; 3] = ["index", "event", "detail"];
pub const COMPARISON_HEADER: [&str; 4] = ["index", "method", "acc_win", "acc_cum"];

type InstanceStream = Box<dyn Iterator<Item = oaml::Result<Instance>>>;

/// `(index, acc_win, acc_cum)` per kept trace row.
pub type Curve = Vec<(u64, f64, f64)>;

pub fn open_stream(source: &StreamSource) -> Result<InstanceStream, CliError> {
    Ok(match source {
        StreamSource::Sea(c) => Box::new(c.generator().map_err(config_error)?.map(Ok)),
        StreamSource::Hyperplane(c) => Box::new(c.generator().map_err(config_error)?.map(Ok)),
        StreamSource::Csv {
            path,
            schema,
            has_header,
        } => Box::new(load_csv_stream(path, schema.clone(), *has_header).map_err(config_error)?),
    })
}

fn config_error(e: oaml::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| output_error(&path, e))
}

/// Streams run output into `trace.csv`, `events.csv` and `search_log.csv`.
pub struct FileSink {
    dir: PathBuf,
    trace: TraceWriter<BufWriter<File>>,
    events: csv::Writer<BufWriter<File>>,
    search_log: SearchLogWriter<BufWriter<File>>,
    pub curve: Curve,
}

impl FileSink {
    pub fn create(dir: &Path, config: &ExperimentConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        let trace = TraceWriter::new(create(dir, "trace.csv")?, config.trace_decimation)
            .map_err(|e| output_error(dir, e))?;
        let mut events = csv::Writer::from_writer(create(dir, "events.csv")?);
        events.write_record(EVENTS_HEADER).map_err(|e| output_error(dir, e))?;
        let search_log = SearchLogWriter::new(create(dir, "search_log.csv")?).map_err(|e| output_error(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            trace,
            events,
            search_log,
            curve: Vec::new(),
        })
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        let dir = self.dir.clone();
        self.trace.flush().map_err(|e| output_error(&dir, e))?;
        self.events.flush().map_err(|e| output_error(&dir, e))?;
        self.search_log.flush().map_err(|e| output_error(&dir, e))
    }
}

impl RunSink for FileSink {
    fn record(&mut self, record: &TraceRecord) -> oaml::Result<()> {
        if self.trace.write(record)? {
            self.curve.push((record.index, record.acc_win, record.acc_cum));
        }
        Ok(())
    }

    fn event(&mut self, event: &Event) -> oaml::Result<()> {
        self.events
            .write_record([event.index.to_string(), event.kind.as_str().to_string(), event.detail.clone()])?;
        Ok(())
    }

    fn search_log(&mut self, entry: &SearchLogEntry) -> oaml::Result<()> {
        self.search_log.write(entry)
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub summary: RunSummary,
    pub seed: u64,
    pub stream: String,
}

fn baseline(method: Method, n_classes: usize, seed: u64) -> Result<Box<dyn Model>, CliError> {
    let classifier: Box<dyn oaml::learners::Classifier> = match method {
        Method::BaselineHat => Box::new(HoeffdingAdaptiveTree::new(n_classes, HatParams::default(), seed)),
        Method::BaselineLevBag => Box::new(
            LeveragingBagging::new(LeveragingParams::default(), n_classes, seed).map_err(config_error)?,
        ),
        _ => unreachable!("not a baseline"),
    };
    Ok(Box::new(Pipeline::new(Vec::new(), classifier)))
}

/// Runs one experiment into `dir`. Artifacts written before a failure are
/// flushed before the error is returned.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<(RunReport, Curve), CliError> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(CliError::Config(violations.join("\n")));
    }
    let source = config.stream.resolve(config.seed).map_err(config_error)?;
    let stream = open_stream(&source)?;
    let n_classes = source.n_classes();
    let mut sink = FileSink::create(dir, config)?;
    let result = match config.method {
        Method::OamlBasic | Method::OamlEnsemble | Method::OamlModelStore => {
            let space = ConfigSpace::with_overrides(&config.space).map_err(config_error)?;
            run_oaml(Arc::new(space), &config.oaml, n_classes, stream, &mut sink)
        }
        Method::BaselineHat | Method::BaselineLevBag => {
            let model = baseline(config.method, n_classes, config.seed)?;
            run_baseline(config.method.as_str(), model, config.oaml.n_0, stream, &mut sink)
        }
    };
    sink.flush()?;
    let mut summary = result.map_err(|e| match e {
        oaml::Error::Config(_) | oaml::Error::UnknownVariant { .. } => CliError::Config(e.to_string()),
        e => CliError::Runtime(e.to_string()),
    })?;
    summary.method = config.method.as_str().to_string();
    let report = RunReport {
        summary,
        seed: config.seed,
        stream: source.describe(),
    };
    let path = dir.join("summary.json");
    let mut out = create(dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| output_error(&path, e))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| output_error(&path, e))?;
    Ok((report, sink.curve))
}

/// Runs several methods on one stream realization and writes the merged
/// long-format `comparison.csv` plus one artifact directory per run.
pub fn compare(configs: &mut [ExperimentConfig], seed: u64, dir: &Path) -> Result<Vec<RunReport>, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Config("compare needs at least two configs".into()));
    }
    for c in configs.iter_mut() {
        c.set_seed(seed);
    }
    let first = &configs[0];
    for c in &configs[1..] {
        if c.stream != first.stream {
            return Err(CliError::Config(format!(
                "stream mismatch: {} and {} use different stream specs",
                first.method, c.method
            )));
        }
        if c.oaml.n_0 != first.oaml.n_0 {
            return Err(CliError::Config(format!(
                "n_0 mismatch: {} uses {}, {} uses {}; curves would not align",
                first.method, first.oaml.n_0, c.method, c.oaml.n_0
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    let mut merged = csv::Writer::from_writer(create(dir, "comparison.csv")?);
    merged.write_record(COMPARISON_HEADER).map_err(|e| output_error(dir, e))?;
    let mut reports = Vec::new();
    let mut used = Vec::new();
    for c in configs.iter() {
        let mut label = c.method.as_str().to_string();
        let repeats = used.iter().filter(|m| **m == c.method).count();
        if repeats > 0 {
            label = format!("{label}-{}", repeats + 1);
        }
        used.push(c.method);
        let (report, curve) = run_experiment(c, &dir.join(&label))?;
        for (index, acc_win, acc_cum) in curve {
            merged
                .write_record([
                    index.to_string(),
                    label.clone(),
                    format!("{acc_win:.6}"),
                    format!("{acc_cum:.6}"),
                ])
                .map_err(|e| output_error(dir, e))?;
        }
        reports.push(report);
    }
    merged.flush().map_err(|e| output_error(dir, e))?;
    let path = dir.join("comparison.json");
    let out = create(dir, "comparison.json")?;
    serde_json::to_writer_pretty(out, &reports).map_err(|e| output_error(&path, e))?;
    Ok(reports)
}
