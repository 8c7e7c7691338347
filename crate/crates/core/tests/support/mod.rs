//! Test doubles shared by the integration tests.
#![allow(dead_code)]

use std::sync::{Arc, Mutex};
use std::time::Duration;

use oaml::pipeline::Model;
use oaml::search::{SearchSpace, Task};
use oaml::stream::{ClassId, Instance};
use oaml::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Labels are `x0 > 0.5`; `x0` is uniform in `[0, 1)`.
pub fn threshold_stream(n: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let x: f64 = rng.random();
            Instance::labeled(i as u64 + 1, vec![x], usize::from(x > 0.5))
        })
        .collect()
}

/// Predicts the true threshold label on a fixed fraction `quality` of
/// inputs and the wrong label elsewhere.
#[derive(Clone)]
pub struct QualityModel {
    pub quality: f64,
    pub panic_on_learn: bool,
    pub delay: Duration,
}

impl Model for QualityModel {
    fn predict_one(&self, x: &[f64]) -> Result<ClassId> {
        let truth = usize::from(x[0] > 0.5);
        let bucket = ((x[0] * 1e6) as u64 % 1000) as f64 / 1000.0;
        Ok(if bucket < self.quality { truth } else { 1 - truth })
    }

    fn learn_one(&mut self, _: &[f64], _: ClassId) -> Result<()> {
        if self.panic_on_learn {
            panic!("component exploded");
        }
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        Ok(())
    }

    fn clone_model(&self) -> Box<dyn Model> {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        format!("Quality({:.3})", self.quality)
    }
}

/// Integer genotypes `0..=max`; `planted` scores perfectly, everything
/// else scores `0.5 + 0.4 g / max`. `FAIL` fails to build and `PANIC`
/// panics while learning.
#[derive(Clone)]
pub struct PlantedSpace {
    pub max: u32,
    pub planted: u32,
    /// Probability that `sample` returns the planted genotype.
    pub planted_rate: f64,
    pub delay: Duration,
    /// Sampling only draws from `0..sample_limit`.
    pub sample_limit: u32,
}

pub const FAIL: u32 = u32::MAX;
pub const PANIC: u32 = u32::MAX - 1;

impl PlantedSpace {
    pub fn new(max: u32, planted: u32) -> Self {
        Self {
            max,
            planted,
            planted_rate: 0.0,
            delay: Duration::ZERO,
            sample_limit: max + 1,
        }
    }

    pub fn quality(&self, g: u32) -> f64 {
        if g == self.planted {
            1.0
        } else {
            0.5 + 0.4 * f64::from(g) / f64::from(self.max)
        }
    }
}

impl SearchSpace for PlantedSpace {
    type Genotype = u32;

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random::<f64>() < self.planted_rate {
            self.planted
        } else {
            rng.random_range(0..self.sample_limit)
        }
    }

    /// Half the time the next integer up, otherwise a fresh sample.
    fn mutate(&self, g: &u32, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random_bool(0.5) {
            (g + 1).min(self.max)
        } else {
            rng.random_range(0..self.sample_limit)
        }
    }

    fn crossover(&self, a: &u32, b: &u32, rng: &mut ChaCha8Rng) -> u32 {
        if rng.random_bool(0.5) {
            *a
        } else {
            *b
        }
    }

    fn validate(&self, g: &u32) -> Result<()> {
        if *g <= self.max {
            Ok(())
        } else {
            Err(Error::Config(format!("{g} outside 0..={}", self.max)))
        }
    }

    fn build(&self, g: &u32, _: &Task, _: u64) -> Result<Box<dyn Model>> {
        match *g {
            FAIL => Err(Error::Model("always fails".into())),
            PANIC => Ok(Box::new(QualityModel {
                quality: 1.0,
                panic_on_learn: true,
                delay: Duration::ZERO,
            })),
            g => Ok(Box::new(QualityModel {
                quality: self.quality(g),
                panic_on_learn: false,
                delay: self.delay,
            })),
        }
    }

    fn default_genotype(&self) -> u32 {
        0
    }

    fn describe(&self, g: &u32) -> String {
        format!("g{g}")
    }
}

/// A shared, ordered log of calls made on instrumented models.
pub type CallLog = Arc<Mutex<Vec<String>>>;

/// Majority-class learner that records every call.
#[derive(Clone)]
pub struct Recorder {
    pub tag: String,
    pub log: CallLog,
    pub counts: Vec<u64>,
}

impl Model for Recorder {
    fn predict_one(&self, _: &[f64]) -> Result<ClassId> {
        self.log.lock().unwrap().push(format!("{}:predict", self.tag));
        Ok(self
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map_or(0, |(c, _)| c))
    }

    fn learn_one(&mut self, _: &[f64], y: ClassId) -> Result<()> {
        self.log.lock().unwrap().push(format!("{}:learn", self.tag));
        if self.counts.len() <= y {
            self.counts.resize(y + 1, 0);
        }
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

/// Each search draws its candidates from a fixed script of qualities
/// (in thousandths); once the script runs out it repeats the last one.
/// Models are [`QualityModel`]s, or [`Recorder`]s when `log` is set.
pub struct ScriptedSpace {
    script: Mutex<std::collections::VecDeque<u32>>,
    last: Mutex<u32>,
    pub log: Option<CallLog>,
    builds: std::sync::atomic::AtomicUsize,
}

impl ScriptedSpace {
    pub fn new(script: &[u32]) -> Self {
        Self {
            script: Mutex::new(script.iter().copied().collect()),
            last: Mutex::new(script.first().copied().unwrap_or(500)),
            log: None,
            builds: Default::default(),
        }
    }

    pub fn recording(script: &[u32], log: CallLog) -> Self {
        Self {
            log: Some(log),
            ..Self::new(script)
        }
    }
}

impl SearchSpace for ScriptedSpace {
    type Genotype = u32;

    fn sample(&self, _: &mut ChaCha8Rng) -> u32 {
        let mut last = self.last.lock().unwrap();
        if let Some(next) = self.script.lock().unwrap().pop_front() {
            *last = next;
        }
        *last
    }

    fn mutate(&self, g: &u32, rng: &mut ChaCha8Rng) -> u32 {
        let _ = rng;
        *g
    }

    fn crossover(&self, a: &u32, _: &u32, _: &mut ChaCha8Rng) -> u32 {
        *a
    }

    fn validate(&self, _: &u32) -> Result<()> {
        Ok(())
    }

    fn build(&self, g: &u32, _: &Task, _: u64) -> Result<Box<dyn Model>> {
        let n = self.builds.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Ok(match &self.log {
            Some(log) => Box::new(Recorder {
                tag: format!("q{g}#{n}"),
                log: Arc::clone(log),
                counts: Vec::new(),
            }),
            None => Box::new(QualityModel {
                quality: f64::from(*g) / 1000.0,
                panic_on_learn: false,
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

/// Signals drift on the listed update numbers (1-based) and nothing else.
#[derive(Clone)]
pub struct FireAt {
    pub at: Vec<u64>,
    pub calls: u64,
}

impl FireAt {
    pub fn new(at: &[u64]) -> Box<Self> {
        Box::new(Self {
            at: at.to_vec(),
            calls: 0,
        })
    }
}

impl oaml::drift::DriftDetector for FireAt {
    fn update(&mut self, _: bool) -> oaml::drift::Verdict {
        self.calls += 1;
        if self.at.contains(&self.calls) {
            oaml::drift::Verdict::Drift
        } else {
            oaml::drift::Verdict::InControl
        }
    }

    fn reset(&mut self) {}

    fn clone_box(&self) -> Box<dyn oaml::drift::DriftDetector> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "FireAt"
    }
}
