//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! `ACCEPTANCE_ONLY=4,5` restricts the run to the listed criteria.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use oaml::drift::{Adwin, DetectorKind, DriftDetector, Verdict};
use oaml::eval::{score_on_window, MetricKind, PrequentialMetric, Source};
use oaml::learners::{
    AdaptiveRandomForest, ArfParams, BaseLearner, Classifier, HoeffdingTree, KnnClassifier, LeveragingBagging,
    LeveragingParams, MaxFeatures, OnlineAdaBoost, OzaBagging, Resampling,
};
use oaml::orchestrator::{Oaml, OamlConfig, Step, Strategy};
use oaml::pipeline::Model;
use oaml::preprocess::{MaxAbsScaler, MinMaxScaler, StandardScaler, Transformer};
use oaml::search::{
    asha_rungs, run_search, Algorithm, ConfigSpace, SearchBudget, SearchConfig, SearchSpace, Task,
};
use oaml::stream::{ClassId, Instance, SeaConfig};
use oaml_cli::config::{ExperimentConfig, Method, Source as ConfigSource};
use oaml_cli::runner::run_experiment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const SEEDS: u64 = 10;

struct Verdicts {
    failed: usize,
}

impl Verdicts {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let status = if pass { "PASS" } else { "FAIL" };
        if !pass {
            self.failed += 1;
        }
        println!("{status} criterion {id} ({name}): {detail}");
    }
}

/// One trace row as written to `trace.csv`.
struct Row {
    index: u64,
    acc_cum: f64,
    acc_win: f64,
    source: String,
    retrain: bool,
}

struct PresetRun {
    trace: Vec<u8>,
    rows: Vec<Row>,
    wall_clock: f64,
}

fn preset(name: &str, seed: u64, method: Option<Method>) -> ExperimentConfig {
    let mut config = ConfigSource::preset(name).unwrap().parse().unwrap();
    if let Some(m) = method {
        config.method = m;
    }
    config.sync_strategy();
    config.set_seed(seed);
    config
}

fn run_preset(config: &ExperimentConfig, dir: &Path) -> PresetRun {
    let start = Instant::now();
    run_experiment(config, dir).unwrap();
    let wall_clock = start.elapsed().as_secs_f64();
    let trace = fs::read(dir.join("trace.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(trace.as_slice());
    let rows = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            Row {
                index: r[0].parse().unwrap(),
                acc_cum: r[3].parse().unwrap(),
                acc_win: r[4].parse().unwrap(),
                source: r[6].to_string(),
                retrain: &r[7] == "1",
            }
        })
        .collect();
    PresetRun {
        trace,
        rows,
        wall_clock,
    }
}

fn row_at(rows: &[Row], index: u64) -> &Row {
    rows.iter().find(|r| r.index == index).expect("index in trace")
}

/// Runs `config` for `seed`, remembering the seed-0 trace for the
/// determinism check.
fn seeded_run(
    tmp: &TempDir,
    name: &str,
    seed: u64,
    method: Option<Method>,
    replays: &mut BTreeMap<String, (ExperimentConfig, Vec<u8>)>,
) -> PresetRun {
    let config = preset(name, seed, method);
    let label = format!("{name}-{}-{seed}", config.method);
    let run = run_preset(&config, &tmp.path().join(&label));
    if seed == 0 {
        replays.entry(name.to_string()).or_insert((config, run.trace.clone()));
    }
    run
}

fn criterion_1(v: &mut Verdicts, tmp: &TempDir, replays: &mut BTreeMap<String, (ExperimentConfig, Vec<u8>)>) {
    let mut ok = 0;
    let mut slowest = 0.0f64;
    let mut gaps = Vec::new();
    for seed in 0..SEEDS {
        let run = seeded_run(tmp, "desk-sea-abrupt", seed, None, replays);
        let before = row_at(&run.rows, 9000).acc_win;
        let after = row_at(&run.rows, 15000).acc_win;
        gaps.push(format!("{:+.3}", after - before));
        slowest = slowest.max(run.wall_clock);
        if (after - before).abs() <= 0.05 {
            ok += 1;
        }
    }
    v.report(
        1,
        "drift recovery, SEA abrupt",
        ok >= 8 && slowest <= 300.0,
        format!(
            "{ok}/{SEEDS} seeds with |acc_win(15000) - acc_win(9000)| <= 0.05 (need 8), slowest seed {slowest:.1}s (limit 300s); gaps [{}]",
            gaps.join(", ")
        ),
    );
}

fn criterion_2(v: &mut Verdicts, tmp: &TempDir, replays: &mut BTreeMap<String, (ExperimentConfig, Vec<u8>)>) {
    let mut ok = 0;
    let mut diffs = Vec::new();
    for seed in 0..SEEDS {
        let ens = seeded_run(tmp, "desk-sea-mixed", seed, Some(Method::OamlEnsemble), replays);
        let basic = seeded_run(tmp, "desk-sea-mixed", seed, Some(Method::OamlBasic), replays);
        let e = ens.rows.last().unwrap().acc_cum;
        let b = basic.rows.last().unwrap().acc_cum;
        diffs.push(format!("{:+.3}", e - b));
        if e >= b - 0.02 {
            ok += 1;
        }
    }
    v.report(
        2,
        "ensemble vs basic, SEA mixed",
        ok >= 7,
        format!(
            "{ok}/{SEEDS} seeds with ensemble acc_cum >= basic - 0.02 (need 7); ensemble - basic [{}]",
            diffs.join(", ")
        ),
    );
}

fn criterion_3(v: &mut Verdicts, tmp: &TempDir, replays: &mut BTreeMap<String, (ExperimentConfig, Vec<u8>)>) {
    let mut ok = 0;
    let mut picks = Vec::new();
    for seed in 0..SEEDS {
        let run = seeded_run(tmp, "desk-sea-cyclic", seed, None, replays);
        // Concept A returns at two thirds of the stream.
        let return_at = preset("desk-sea-cyclic", seed, None);
        let oaml_cli::config::StreamSpec::Sea { length, .. } = return_at.stream else {
            unreachable!("cyclic preset is SEA")
        };
        let second_a = 2 * length / 3;
        let pos = run.rows.iter().position(|r| r.index > second_a && r.retrain);
        let chosen = pos
            .and_then(|p| run.rows.get(p + 1))
            .map_or("none".to_string(), |r| r.source.clone());
        if chosen == Source::ModelStore.as_str() {
            ok += 1;
        }
        picks.push(chosen);
    }
    v.report(
        3,
        "model store recall, cyclic SEA",
        ok >= 7,
        format!(
            "{ok}/{SEEDS} seeds select a stored pipeline at the first adaptation of the returning concept (need 7); sources [{}]",
            picks.join(", ")
        ),
    );
}

fn bernoulli_errors(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random_bool(p)
}

fn criterion_4(v: &mut Verdicts) {
    let mut detail = Vec::new();
    let mut pass = true;
    for kind in [DetectorKind::Ddm, DetectorKind::Eddm, DetectorKind::Adwin] {
        let mut hits = 0;
        let mut delays = Vec::new();
        for seed in 0..SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut detector = kind.build();
            let mut first = None;
            for i in 1..=3000u64 {
                let p = if i <= 2000 { 0.1 } else { 0.5 };
                let verdict = detector.update(bernoulli_errors(&mut rng, p));
                if i > 2000 && verdict == Verdict::Drift && first.is_none() {
                    first = Some(i - 2000);
                }
            }
            if first.is_some() {
                hits += 1;
            }
            delays.push(first.map_or("-".to_string(), |d| d.to_string()));
        }
        pass &= hits >= 8;
        detail.push(format!("{} {hits}/{SEEDS} (delays {})", kind.describe(), delays.join(" ")));
    }
    let mut worst_cuts = 0;
    let mut worst_ddm = 0;
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut adwin = Adwin::new(0.002);
        let mut ddm = DetectorKind::Ddm.build();
        let mut false_drifts = 0;
        for _ in 0..50_000 {
            let e = bernoulli_errors(&mut rng, 0.2);
            adwin.update_bit(e);
            if ddm.update(e) == Verdict::Drift {
                false_drifts += 1;
            }
        }
        worst_cuts = worst_cuts.max(adwin.cuts());
        worst_ddm = worst_ddm.max(false_drifts);
    }
    pass &= worst_cuts <= 5 && worst_ddm <= 2;
    detail.push(format!(
        "stationary: max ADWIN cuts {worst_cuts} (limit 5), max DDM false drifts {worst_ddm} (limit 2)"
    ));
    v.report(4, "detector suite", pass, detail.join("; "));
}

/// Integer genotypes; `planted` scores perfectly, others score less.
struct Planted {
    max: u32,
    planted: u32,
    planted_rate: f64,
    delay: Duration,
}

#[derive(Clone)]
struct Fixed {
    quality: f64,
    delay: Duration,
}

/// Label of the threshold streams used with the mock models.
fn threshold_label(x: &[f64]) -> ClassId {
    usize::from(x[0] > 0.5)
}

impl Model for Fixed {
    fn predict_one(&self, x: &[f64]) -> oaml::Result<ClassId> {
        let truth = threshold_label(x);
        let bucket = ((x[0] * 1e6) as u64 % 1000) as f64 / 1000.0;
        Ok(if bucket < self.quality { truth } else { 1 - truth })
    }

    fn learn_one(&mut self, _: &[f64], _: ClassId) -> oaml::Result<()> {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        Ok(())
    }

    fn clone_model(&self) -> Box<dyn Model> {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        format!("Fixed({:.3})", self.quality)
    }
}

impl SearchSpace for Planted {
    type Genotype = u32;

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random_bool(self.planted_rate) {
            self.planted
        } else {
            rng.random_range(0..=self.max)
        }
    }

    fn mutate(&self, g: &u32, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random_bool(0.5) {
            (g + 1).min(self.max)
        } else {
            rng.random_range(0..=self.max)
        }
    }

    fn crossover(&self, a: &u32, b: &u32, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random_bool(0.5) {
            *a
        } else {
            *b
        }
    }

    fn validate(&self, _: &u32) -> oaml::Result<()> {
        Ok(())
    }

    fn build(&self, g: &u32, _: &Task, _: u64) -> oaml::Result<Box<dyn Model>> {
        let quality = if *g == self.planted {
            1.0
        } else {
            0.5 + 0.4 * f64::from(*g) / f64::from(self.max)
        };
        Ok(Box::new(Fixed {
            quality,
            delay: self.delay,
        }))
    }

    fn default_genotype(&self) -> u32 {
        0
    }

    fn describe(&self, g: &u32) -> String {
        format!("g{g}")
    }
}

fn threshold_stream(n: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let x: f64 = rng.random();
            Instance::labeled(i as u64 + 1, vec![x], threshold_label(&[x]))
        })
        .collect()
}

fn criterion_5(v: &mut Verdicts) {
    let mut detail = Vec::new();
    let mut pass = true;
    let space = Planted {
        max: 1000,
        planted: 1000,
        planted_rate: 0.1,
        delay: Duration::ZERO,
    };
    let window = threshold_stream(1000, 5);
    let evals = SearchBudget {
        t_max: None,
        max_evaluations: Some(80),
        worker_count: 1,
    };
    for algorithm in [Algorithm::Random, Algorithm::Asha, Algorithm::Evolutionary] {
        let config = SearchConfig {
            algorithm,
            ..Default::default()
        };
        let out = run_search(&space, &window, 2, &config, &evals, 11, None).unwrap();
        let mut ok = out.genotype == 1000 && out.window_score == 1.0;
        if algorithm == Algorithm::Asha {
            let top = asha_rungs(1000, 2.0, None).len() - 1;
            ok &= out.results.iter().any(|r| r.genotype == 1000 && r.rung == top);
        }
        pass &= ok;
        detail.push(format!("{} {}", algorithm.as_str(), if ok { "found" } else { "missed" }));
    }

    let slow = Planted {
        delay: Duration::from_micros(200),
        ..space
    };
    let window = threshold_stream(100, 10);
    let t_max = Duration::from_millis(200);
    let mut late = 0;
    let mut total = 0;
    for algorithm in [Algorithm::Random, Algorithm::Asha, Algorithm::Evolutionary] {
        for workers in [1, 2] {
            let budget = SearchBudget {
                t_max: Some(t_max),
                max_evaluations: None,
                worker_count: workers,
            };
            let config = SearchConfig {
                algorithm,
                ..Default::default()
            };
            let out = run_search(&slow, &window, 2, &config, &budget, 3, None).unwrap();
            total += out.results.len();
            late += out
                .results
                .iter()
                .filter(|r| r.finished_at.saturating_sub(r.duration) > t_max)
                .count();
        }
    }
    pass &= late == 0 && total > 0;
    detail.push(format!("{late} of {total} evaluations started after t_max"));
    v.report(5, "search correctness and budget", pass, detail.join("; "));
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn criterion_6(v: &mut Verdicts) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data: Vec<Vec<f64>> = (0..10_000)
        .map(|_| (0..4).map(|j| rng.random_range(-50.0..50.0) * f64::from(j + 1) + 3.0).collect())
        .collect();
    let probe = vec![1.5, -2.0, 30.0, 7.25];
    let mut worst = [0.0f64; 3];
    let mut standard = StandardScaler::new();
    let mut minmax = MinMaxScaler::new();
    let mut maxabs = MaxAbsScaler::new();
    for (t, x) in data.iter().enumerate() {
        standard.learn_one(x).unwrap();
        minmax.learn_one(x).unwrap();
        maxabs.learn_one(x).unwrap();
        if (t + 1) % 500 != 0 {
            continue;
        }
        let seen = &data[..=t];
        let n = seen.len() as f64;
        for j in 0..4 {
            let column: Vec<f64> = seen.iter().map(|r| r[j]).collect();
            let mean = column.iter().sum::<f64>() / n;
            let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let abs = column.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let expected = [(probe[j] - mean) / var.sqrt(), (probe[j] - lo) / (hi - lo), probe[j] / abs];
            let got = [
                standard.transform_one(&probe).unwrap()[j],
                minmax.transform_one(&probe).unwrap()[j],
                maxabs.transform_one(&probe).unwrap()[j],
            ];
            for k in 0..3 {
                worst[k] = worst[k].max(relative_gap(expected[k], got[k]));
            }
        }
    }
    let scalers_ok = worst.iter().all(|w| *w <= 1e-9);

    // Windowed k-NN against a brute-force batch oracle over the same window.
    let sea: Vec<Instance> = SeaConfig::stationary(1, 0.1, 2000, 8).generator().unwrap().collect();
    let mut knn = KnnClassifier::new(2);
    let mut window: VecDeque<(Vec<f64>, ClassId)> = VecDeque::new();
    let (mut knn_hits, mut oracle_hits) = (0usize, 0usize);
    for inst in &sea {
        let y = inst.label.unwrap();
        let mut dists: Vec<(f64, usize)> = window
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (p.iter().zip(&inst.features).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = [0usize; 2];
        for &(_, i) in dists.iter().take(5) {
            votes[window[i].1] += 1;
        }
        let oracle = usize::from(votes[1] > votes[0]);
        oracle_hits += usize::from(oracle == y);
        knn_hits += usize::from(knn.predict_one(&inst.features) == y);
        knn.learn_one(&inst.features, y);
        window.push_back((inst.features.clone(), y));
        if window.len() > 1000 {
            window.pop_front();
        }
    }
    let gap = (knn_hits as f64 - oracle_hits as f64).abs() / sea.len() as f64;
    v.report(
        6,
        "oracle equivalence",
        scalers_ok && gap <= 0.01,
        format!(
            "max relative error standard {:.1e}, minmax {:.1e}, maxabs {:.1e} (limit 1e-9); k-NN accuracy gap {gap:.4} over {} queries (limit 0.01)",
            worst[0],
            worst[1],
            worst[2],
            sea.len()
        ),
    );
}

type CallLog = Arc<Mutex<Vec<String>>>;

/// Majority-class model that logs its calls; clones carry a `'` suffix.
#[derive(Clone)]
struct Recorder {
    tag: String,
    log: CallLog,
    counts: [u64; 2],
}

impl Model for Recorder {
    fn predict_one(&self, _: &[f64]) -> oaml::Result<ClassId> {
        self.log.lock().unwrap().push(format!("model {}:predict", self.tag));
        Ok(usize::from(self.counts[1] > self.counts[0]))
    }

    fn learn_one(&mut self, _: &[f64], y: ClassId) -> oaml::Result<()> {
        self.log.lock().unwrap().push(format!("model {}:learn", self.tag));
        self.counts[y] += 1;
        Ok(())
    }

    fn clone_model(&self) -> Box<dyn Model> {
        Box::new(Recorder {
            tag: format!("{}'", self.tag),
            ..self.clone()
        })
    }

    fn name(&self) -> String {
        self.tag.clone()
    }
}

/// Each search samples the next quality from a script.
struct Scripted {
    script: Mutex<VecDeque<u32>>,
    log: Option<CallLog>,
    builds: AtomicUsize,
}

impl Scripted {
    fn new(script: &[u32], log: Option<CallLog>) -> Self {
        Self {
            script: Mutex::new(script.iter().copied().collect()),
            log,
            builds: AtomicUsize::new(0),
        }
    }
}

impl SearchSpace for Scripted {
    type Genotype = u32;

    fn sample(&self, _: &mut ChaCha8Rng) -> u32 {
        let mut s = self.script.lock().unwrap();
        if s.len() > 1 {
            s.pop_front().unwrap()
        } else {
            s[0]
        }
    }

    fn mutate(&self, g: &u32, _: &mut ChaCha8Rng) -> u32 {
        *g
    }

    fn crossover(&self, a: &u32, _: &u32, _: &mut ChaCha8Rng) -> u32 {
        *a
    }

    fn validate(&self, _: &u32) -> oaml::Result<()> {
        Ok(())
    }

    fn build(&self, g: &u32, _: &Task, _: u64) -> oaml::Result<Box<dyn Model>> {
        let n = self.builds.fetch_add(1, Ordering::SeqCst);
        Ok(match &self.log {
            Some(log) => Box::new(Recorder {
                tag: format!("q{g}#{n}"),
                log: Arc::clone(log),
                counts: [0; 2],
            }),
            None => Box::new(Fixed {
                quality: f64::from(*g) / 1000.0,
                delay: Duration::ZERO,
            }),
        })
    }

    fn default_genotype(&self) -> u32 {
        0
    }

    fn describe(&self, g: &u32) -> String {
        format!("q{g}")
    }
}

/// Fires on the listed update numbers.
#[derive(Clone)]
struct FireAt {
    at: Vec<u64>,
    calls: u64,
}

impl DriftDetector for FireAt {
    fn update(&mut self, _: bool) -> Verdict {
        self.calls += 1;
        if self.at.contains(&self.calls) {
            Verdict::Drift
        } else {
            Verdict::InControl
        }
    }

    fn reset(&mut self) {}

    fn clone_box(&self) -> Box<dyn DriftDetector> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "FireAt"
    }
}

fn scripted_config(strategy: Strategy, k: usize) -> OamlConfig {
    OamlConfig {
        n_0: 100,
        n_s: 100,
        k,
        strategy,
        max_evaluations: Some(1),
        max_train: None,
        detector: DetectorKind::Off,
        search: SearchConfig {
            algorithm: Algorithm::Random,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn step_name(s: &Step) -> &'static str {
    match s {
        Step::Predict { .. } => "predict",
        Step::MetricUpdate { .. } => "metric",
        Step::Train { .. } => "train",
        Step::DetectorUpdate { .. } => "detector",
        Step::SearchStarted { .. } => "search_started",
        Step::SearchFinished { .. } => "search_finished",
        Step::Compared { .. } => "compare",
        Step::Rescored { .. } => "rescore",
        Step::Selected { .. } => "select",
        Step::Appended { .. } => "append",
        Step::Popped { .. } => "pop",
        Step::Evicted { .. } => "evict",
    }
}

/// Checks one strategy's merged model/step log against the adaptation loop step
/// order. Returns a description of the first violation.
fn check_order(strategy: Strategy, log: &[String]) -> Result<usize, String> {
    let mut i = 0;
    let mut samples = 0;
    let next = |i: &mut usize| -> Option<&str> {
        let e = log.get(*i).map(String::as_str);
        *i += 1;
        e
    };
    let is_live = |e: &str| e.starts_with("model ") && !e.contains('\'');
    while i < log.len() {
        // Predict: live members predict, then the step marker.
        let mut predicted = false;
        while log.get(i).is_some_and(|e| is_live(e) && e.ends_with(":predict")) {
            predicted = true;
            i += 1;
        }
        let ok = predicted
            && next(&mut i) == Some("step predict")
            && next(&mut i) == Some("step metric");
        if !ok {
            return Err(format!("sample {samples}: predict/metric out of order near entry {i}"));
        }
        let mut learned = false;
        while log.get(i).is_some_and(|e| is_live(e) && e.ends_with(":learn")) {
            learned = true;
            i += 1;
        }
        if !learned || next(&mut i) != Some("step train") || next(&mut i) != Some("step detector") {
            return Err(format!("sample {samples}: train/detector out of order near entry {i}"));
        }
        samples += 1;
        if log.get(i).map(String::as_str) != Some("step search_started") {
            continue;
        }
        i += 1;
        while log.get(i).is_some_and(|e| e != "step search_finished") {
            i += 1;
        }
        i += 1;
        // Comparison: only clones may learn or predict.
        let mut phase = Vec::new();
        while let Some(e) = log.get(i) {
            if e.starts_with("model ") {
                if !e.contains('\'') {
                    return Err(format!("live model touched during comparison: {e}"));
                }
            } else if e == "step predict" || !e.starts_with("step ") {
                break;
            } else {
                let name = e.trim_start_matches("step ");
                if ["predict", "metric"].contains(&name) {
                    break;
                }
                phase.push(name.to_string());
            }
            i += 1;
            if log.get(i).is_some_and(|e| e.starts_with("model ") && !e.contains('\'')) {
                break;
            }
        }
        let phase: Vec<&str> = phase.iter().map(String::as_str).collect();
        let expected_ok = match strategy {
            Strategy::Ensemble => {
                phase == ["compare", "select", "append"] || phase == ["compare", "select", "append", "pop"]
            }
            Strategy::ModelStore => {
                let rescored = phase.iter().take_while(|p| **p == "rescore").count();
                let rest = &phase[rescored..];
                rescored >= 1 && (rest == ["select", "append"] || rest == ["select", "append", "evict"])
            }
            Strategy::Basic => phase == ["select"],
        };
        if !expected_ok {
            return Err(format!("{strategy:?} adaptation steps {phase:?}"));
        }
    }
    Ok(samples)
}

fn run_scripted(
    strategy: Strategy,
    k: usize,
    script: &[u32],
    fire: &[u64],
    log: Option<CallLog>,
) -> (Oaml<Scripted>, Vec<Step>) {
    let data = threshold_stream(300, 3);
    let space = Arc::new(Scripted::new(script, log.clone()));
    let mut oaml = Oaml::new(space, scripted_config(strategy, k), 2)
        .unwrap()
        .with_detector(Box::new(FireAt {
            at: fire.to_vec(),
            calls: 0,
        }));
    let steps = Arc::new(Mutex::new(Vec::new()));
    let probe_steps = Arc::clone(&steps);
    oaml.set_probe(move |s| {
        probe_steps.lock().unwrap().push(s.clone());
        if let Some(log) = &log {
            log.lock().unwrap().push(format!("step {}", step_name(s)));
        }
    });
    oaml.initialize(&data[..100]).unwrap();
    for inst in &data[100..] {
        oaml.process(inst).unwrap();
    }
    let steps = steps.lock().unwrap().clone();
    (oaml, steps)
}

fn criterion_7(v: &mut Verdicts) {
    let mut detail = Vec::new();
    let mut pass = true;
    let fire: Vec<u64> = (1..=12).map(|i| i * 15).collect();
    for strategy in [Strategy::Basic, Strategy::Ensemble, Strategy::ModelStore] {
        let log: CallLog = Arc::default();
        let (_, _) = run_scripted(strategy, 3, &[500], &fire, Some(Arc::clone(&log)));
        let entries = log.lock().unwrap().clone();
        // Drop the initial search, which precedes the first online sample.
        let start = entries
            .iter()
            .position(|e| e == "step search_finished")
            .map_or(0, |p| p + 1);
        match check_order(strategy, &entries[start..]) {
            Ok(n) => detail.push(format!("{} order ok over {n} samples", strategy.as_str())),
            Err(e) => {
                pass = false;
                detail.push(e);
            }
        }
    }

    // Eviction policies: FIFO for the ensemble, lowest score for the store.
    let (oaml, steps) = run_scripted(Strategy::Ensemble, 3, &[900, 600, 950, 700, 800], &[10, 20, 30, 40], None);
    let popped: Vec<u64> = steps
        .iter()
        .filter_map(|s| match s {
            Step::Popped { id } => Some(*id),
            _ => None,
        })
        .collect();
    let fifo = popped == [0, 1] && oaml.ensemble_ids() == [2, 3, 4];
    let (oaml, steps) = run_scripted(Strategy::ModelStore, 3, &[900, 600, 950, 700, 800], &[10, 20, 30, 40], None);
    let evicted: Vec<u64> = steps
        .iter()
        .filter_map(|s| match s {
            Step::Evicted { id } => Some(*id),
            _ => None,
        })
        .collect();
    let kept: Vec<u32> = oaml
        .store_entries()
        .iter()
        .map(|(id, _)| *oaml.genotype(*id).unwrap())
        .collect();
    let by_score = evicted == [1, 3] && kept == [900, 950, 800];
    pass &= fifo && by_score;
    detail.push(format!("ensemble popped {popped:?} (oldest first)"));
    detail.push(format!("store evicted {evicted:?}, kept qualities {kept:?} (lowest score out)"));
    v.report(7, "adaptation loop conformance", pass, detail.join("; "));
}

fn criterion_8(v: &mut Verdicts, tmp: &TempDir, replays: &mut BTreeMap<String, (ExperimentConfig, Vec<u8>)>) {
    for name in ["desk-sea-abrupt", "desk-sea-mixed", "desk-sea-cyclic", "desk-hyperplane"] {
        if !replays.contains_key(name) {
            let config = preset(name, 0, None);
            let run = run_preset(&config, &tmp.path().join(format!("{name}-first")));
            replays.insert(name.to_string(), (config, run.trace));
        }
    }
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, (config, first)) in replays.iter() {
        let again = run_preset(config, &tmp.path().join(format!("{name}-replay")));
        let same = again.trace == *first;
        pass &= same;
        detail.push(format!(
            "{name} {} ({} bytes)",
            if same { "identical" } else { "DIFFERS" },
            first.len()
        ));
    }
    v.report(8, "determinism", pass, detail.join("; "));
}

fn same_predictions(a: &mut dyn Classifier, b: &mut dyn Classifier, data: &[Instance]) -> bool {
    data.iter().all(|inst| {
        let y = inst.label.unwrap();
        let same = a.predict_one(&inst.features) == b.predict_one(&inst.features);
        a.learn_one(&inst.features, y);
        b.learn_one(&inst.features, y);
        same
    })
}

fn ladder_ensembles() -> Vec<String> {
    let data: Vec<Instance> = SeaConfig::stationary(2, 0.1, 3000, 9).generator().unwrap().collect();
    let mut mismatches = Vec::new();
    for base in BaseLearner::ALL {
        let mut oza = OzaBagging::new(base, 1, 2, 1)
            .unwrap()
            .with_resampling(Resampling::Fixed(1))
            .without_drift_detection();
        if !same_predictions(&mut *base.build(2), &mut oza, &data) {
            mismatches.push(format!("OzaBagging({})", base.name()));
        }
        let params = LeveragingParams {
            base,
            n_models: 1,
            ..Default::default()
        };
        let mut lev = LeveragingBagging::new(params, 2, 1)
            .unwrap()
            .with_fixed_weight(1)
            .without_drift_detection();
        if !same_predictions(&mut *base.build(2), &mut lev, &data) {
            mismatches.push(format!("LeveragingBagging({})", base.name()));
        }
        let mut boost = OnlineAdaBoost::new(base, 1, 2, 1)
            .unwrap()
            .with_resampling(Resampling::Fixed(1));
        if !same_predictions(&mut *base.build(2), &mut boost, &data) {
            mismatches.push(format!("OnlineAdaBoost({})", base.name()));
        }
    }
    let params = ArfParams {
        n_models: 1,
        max_features: MaxFeatures::All,
        ..Default::default()
    };
    let tree_params = oaml::learners::HoeffdingTreeParams {
        grace_period: params.grace_period,
        split_criterion: oaml::learners::SplitCriterion::InfoGini,
        split_confidence: params.split_confidence,
        tie_threshold: params.tie_threshold,
        leaf_prediction: params.leaf_prediction,
        nb_threshold: params.nb_threshold,
    };
    let mut arf = AdaptiveRandomForest::new(params, 2, 1)
        .unwrap()
        .with_resampling(Resampling::Fixed(1));
    if !same_predictions(&mut HoeffdingTree::new(2, tree_params), &mut arf, &data) {
        mismatches.push("AdaptiveRandomForest".into());
    }
    mismatches
}

/// The adaptation loop with k = 1 written out directly: the backup ensemble holds
/// exactly the previous champion.
fn ladder_k1(seed: u64) -> Result<usize, String> {
    let data: Vec<Instance> = SeaConfig::abrupt(6000, 0.1, seed).generator().unwrap().collect();
    let config = OamlConfig {
        n_0: 500,
        n_s: 500,
        k: 1,
        strategy: Strategy::Ensemble,
        max_evaluations: Some(6),
        max_train: Some(1500),
        detector: DetectorKind::Eddm,
        seed,
        search: SearchConfig {
            population_size: 4,
            ..Default::default()
        },
        ..Default::default()
    };
    let space = Arc::new(ConfigSpace::default());
    let mut oaml = Oaml::new(Arc::clone(&space), config.clone(), 2).unwrap();
    oaml.initialize(&data[..500]).unwrap();

    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let budget = config.budget();
    let search = |window: &[Instance], seeds: &mut ChaCha8Rng, incumbent: Option<&_>| {
        run_search(&*space, window, 2, &config.search, &budget, seeds.random(), incumbent).unwrap()
    };
    let first = search(&data[..500], &mut seeds, None);
    let mut incumbent = first.genotype.clone();
    let mut models: Vec<Box<dyn Model>> = vec![first.model];
    let mut active = 0usize;
    let mut previous = 0usize;
    let mut active_is_ensemble = false;
    let mut detector = DetectorKind::Eddm.build();
    let mut buffer: VecDeque<Instance> = data[..500].iter().cloned().collect();
    let mut last_training = 500u64;
    let mut adaptations = 0;
    for inst in &data[500..] {
        let y = inst.label.unwrap();
        let out = oaml.process(inst).unwrap();
        let prediction = models[active].predict_one(&inst.features).unwrap();
        let source = if active_is_ensemble { Source::Ensemble } else { Source::AutoML };
        if out.record.prediction != prediction || out.record.source != source {
            return Err(format!("diverged at {}", inst.index));
        }
        models[active].learn_one(&inst.features, y).unwrap();
        buffer.pop_front();
        buffer.push_back(inst.clone());
        let drift = detector.update(prediction != y) == Verdict::Drift;
        if drift || inst.index - last_training >= 1500 {
            last_training = inst.index;
            adaptations += 1;
            let window: Vec<Instance> = buffer.iter().cloned().collect();
            let champion = search(&window, &mut seeds, Some(&incumbent));
            incumbent = champion.genotype.clone();
            let mut copy = models[previous].clone_model();
            let ensemble_score = score_on_window(&mut *copy, &window, false, MetricKind::Accuracy).unwrap();
            models.push(champion.model);
            let new = models.len() - 1;
            if -ensemble_score <= -champion.window_score {
                active = previous;
                active_is_ensemble = true;
            } else {
                active = new;
                active_is_ensemble = false;
            }
            previous = new;
        }
    }
    if adaptations == 0 {
        return Err("no adaptation happened".into());
    }
    Ok(adaptations)
}

/// With detection and scheduled retrains off, every strategy replays the
/// initial champion.
fn ladder_frozen(seed: u64) -> Result<(), String> {
    let data: Vec<Instance> = SeaConfig::abrupt(4000, 0.1, seed).generator().unwrap().collect();
    let space = Arc::new(ConfigSpace::default());
    let base = OamlConfig {
        n_0: 500,
        n_s: 500,
        max_evaluations: Some(6),
        max_train: None,
        detector: DetectorKind::Off,
        seed,
        search: SearchConfig {
            population_size: 4,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let initial = run_search(&*space, &data[..500], 2, &base.search, &base.budget(), seeds.random(), None).unwrap();
    let mut plain = initial.model;
    let mut metric = PrequentialMetric::new(MetricKind::Accuracy);
    let mut expected = Vec::new();
    for inst in &data[500..] {
        let y = inst.label.unwrap();
        let p = plain.predict_one(&inst.features).unwrap();
        metric.update(y, p);
        plain.learn_one(&inst.features, y).unwrap();
        expected.push((p, metric.accuracy()));
    }
    for strategy in [Strategy::Basic, Strategy::Ensemble, Strategy::ModelStore] {
        let config = OamlConfig {
            strategy,
            ..base.clone()
        };
        let mut oaml = Oaml::new(Arc::clone(&space), config, 2).unwrap();
        oaml.initialize(&data[..500]).unwrap();
        for (inst, (p, acc)) in data[500..].iter().zip(&expected) {
            let r = oaml.process(inst).unwrap().record;
            if r.prediction != *p || r.acc_cum != *acc || r.source != Source::AutoML || r.retrain {
                return Err(format!("{} diverged at {}", strategy.as_str(), inst.index));
            }
        }
    }
    Ok(())
}

fn criterion_9(v: &mut Verdicts) {
    let mut detail = Vec::new();
    let mismatches = ladder_ensembles();
    let mut pass = mismatches.is_empty();
    detail.push(if mismatches.is_empty() {
        "n_models=1 ensembles match their base learners".to_string()
    } else {
        format!("mismatching ensembles {mismatches:?}")
    });
    for seed in 0..3 {
        match ladder_k1(seed) {
            Ok(n) => detail.push(format!("k=1 seed {seed} matches ({n} adaptations)")),
            Err(e) => {
                pass = false;
                detail.push(format!("k=1 seed {seed}: {e}"));
            }
        }
        match ladder_frozen(seed) {
            Ok(()) => detail.push(format!("frozen seed {seed} matches")),
            Err(e) => {
                pass = false;
                detail.push(format!("frozen seed {seed}: {e}"));
            }
        }
    }
    v.report(9, "degeneracy ladder", pass, detail.join("; "));
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|c| c.trim().parse().ok()).collect());
    let wanted = |id: u32| only.as_ref().is_none_or(|o| o.contains(&id));
    let tmp = TempDir::new().unwrap();
    let mut replays = BTreeMap::new();
    let mut v = Verdicts { failed: 0 };
    let start = Instant::now();
    if wanted(4) {
        criterion_4(&mut v);
    }
    if wanted(5) {
        criterion_5(&mut v);
    }
    if wanted(6) {
        criterion_6(&mut v);
    }
    if wanted(7) {
        criterion_7(&mut v);
    }
    if wanted(9) {
        criterion_9(&mut v);
    }
    if wanted(1) {
        criterion_1(&mut v, &tmp, &mut replays);
    }
    if wanted(2) {
        criterion_2(&mut v, &tmp, &mut replays);
    }
    if wanted(3) {
        criterion_3(&mut v, &tmp, &mut replays);
    }
    if wanted(8) {
        criterion_8(&mut v, &tmp, &mut replays);
    }
    println!(
        "acceptance: {} failed, {:.0}s",
        v.failed,
        start.elapsed().as_secs_f64()
    );
    if v.failed > 0 {
        std::process::exit(1);
    }
}
