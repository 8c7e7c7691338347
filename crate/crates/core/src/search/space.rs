//! The pipeline search space: preprocessors and classifiers with their
//! hyperparameter grids, plus the genetic operators over it.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SearchSpace, Task};
use crate::error::{Error, Result};
use crate::learners::{
    AdaptiveRandomForest, ArfParams, BaggingMethod, BaseLearner, Classifier, HatParams,
    HoeffdingAdaptiveTree, HoeffdingTreeParams, LeafPrediction, LeveragingBagging,
    LeveragingParams, MaxFeatures, OnlineAdaBoost, OzaBagging, SplitCriterion,
};
use crate::pipeline::{Model, Pipeline};
use crate::preprocess::{
    polynomial_output_dim, NormOrder, PreprocessorSpec, MAX_POLYNOMIAL_OUTPUT,
};

/// A hyperparameter value as it appears in genotypes and config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl Value {
    fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => (a - b).abs() <= 1e-12 * a.abs().max(1.0),
            (Value::Int(a), Value::Real(b)) | (Value::Real(b), Value::Int(a)) => {
                (*a as f64 - b).abs() <= 1e-12
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Str(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Inclusive integer range.
    Int { lo: i64, hi: i64 },
    Choice(Vec<Value>),
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Int { lo, hi }, Value::Int(i)) => (lo..=hi).contains(&i),
            (Domain::Int { .. }, _) => false,
            (Domain::Choice(options), v) => options.iter().any(|o| o.same(v)),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Value {
        match self {
            Domain::Int { lo, hi } => Value::Int(rng.random_range(*lo..=*hi)),
            Domain::Choice(options) => options.choose(rng).expect("non-empty domain").clone(),
        }
    }

    fn is_fixed(&self) -> bool {
        match self {
            Domain::Int { lo, hi } => lo == hi,
            Domain::Choice(options) => options.len() < 2,
        }
    }

    /// A different value: a nearby integer or another member of the set.
    fn perturb(&self, current: &Value, rng: &mut ChaCha8Rng) -> Value {
        match (self, current) {
            (Domain::Int { lo, hi }, Value::Int(v)) => {
                let reach = ((hi - lo) / 10).max(1);
                let step = rng.random_range(1..=reach);
                let up = if *v >= *hi {
                    false
                } else if *v <= *lo {
                    true
                } else {
                    rng.random_bool(0.5)
                };
                let next = if up { v + step } else { v - step };
                Value::Int(next.clamp(*lo, *hi))
            }
            (Domain::Choice(options), _) => {
                let others: Vec<&Value> = options.iter().filter(|o| !o.same(current)).collect();
                others
                    .choose(rng)
                    .map_or_else(|| current.clone(), |v| (*v).clone())
            }
            _ => self.sample(rng),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Int { lo, hi } => write!(f, "[{lo}, {hi}]"),
            Domain::Choice(options) => {
                let items: Vec<String> = options.iter().map(Value::to_string).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub domain: Domain,
    pub default: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub name: &'static str,
    pub params: Vec<ParamSpec>,
}

impl ComponentSpec {
    fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// One configured pipeline step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub params: BTreeMap<String, Value>,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            return write!(f, "{}", self.name);
        }
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}({})", self.name, params.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Default,
    Random,
    Mutated,
    Crossover,
    Pinned,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineGenotype {
    pub preprocessors: Vec<Component>,
    pub classifier: Component,
    pub provenance: Provenance,
}

/// Equality ignores provenance.
impl PartialEq for PipelineGenotype {
    fn eq(&self, other: &Self) -> bool {
        self.preprocessors == other.preprocessors && self.classifier == other.classifier
    }
}

impl fmt::Display for PipelineGenotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.preprocessors {
            write!(f, "{p} > ")?;
        }
        write!(f, "{}", self.classifier)
    }
}

pub const MAX_PREPROCESSORS: usize = 2;
const POLYNOMIAL: &str = "PolynomialExtender";
const ROBUST: &str = "RobustScaler";
const RESAMPLE_ATTEMPTS: usize = 64;

fn ints(values: &[i64]) -> Domain {
    Domain::Choice(values.iter().map(|&v| Value::Int(v)).collect())
}

fn reals(values: &[f64]) -> Domain {
    Domain::Choice(values.iter().map(|&v| Value::Real(v)).collect())
}

fn strs(values: &[&str]) -> Domain {
    Domain::Choice(values.iter().map(|&v| Value::Str(v.to_string())).collect())
}

fn bools() -> Domain {
    Domain::Choice(vec![Value::Bool(true), Value::Bool(false)])
}

/// `lo, lo + step, ...` up to and including `hi`, rounded to 1e-9.
fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

fn p(name: &'static str, domain: Domain, default: Value) -> ParamSpec {
    ParamSpec {
        name,
        domain,
        default,
    }
}

fn base_models() -> Domain {
    strs(&BaseLearner::ALL.map(BaseLearner::name))
}

fn default_base() -> Value {
    Value::Str(BaseLearner::HoeffdingTree.name().to_string())
}

/// Classifier entries with their grids.
pub fn classifier_specs() -> Vec<ComponentSpec> {
    let tie = reals(&[0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08]);
    let leaf = strs(&["mc", "nb", "nba"]);
    vec![
        ComponentSpec {
            name: "HAT",
            params: vec![
                p("grace_period", Domain::Int { lo: 50, hi: 350 }, Value::Int(200)),
                p(
                    "split_criterion",
                    strs(&["gini", "hellinger", "info_gini"]),
                    Value::Str("info_gini".into()),
                ),
                p("split_confidence", reals(&[1e-2, 1e-4, 1e-7, 1e-9]), Value::Real(1e-7)),
                p("tie_threshold", tie.clone(), Value::Real(0.05)),
                p("leaf_prediction", leaf.clone(), Value::Str("nba".into())),
                p("bootstrap_sampling", bools(), Value::Bool(true)),
                p("drift_window_threshold", ints(&[100, 200, 300, 400, 500]), Value::Int(300)),
                p("adwin_confidence", reals(&[2e-4, 2e-3, 2e-2]), Value::Real(2e-3)),
            ],
        },
        ComponentSpec {
            name: "ARF",
            params: vec![
                p("n_models", Domain::Int { lo: 1, hi: 20 }, Value::Int(10)),
                p(
                    "max_features",
                    Domain::Choice(vec![
                        Value::Real(0.2),
                        Value::Real(0.5),
                        Value::Real(0.7),
                        Value::Real(1.0),
                        Value::Str("sqrt".into()),
                        Value::Str("log2".into()),
                        Value::Str("None".into()),
                    ]),
                    Value::Str("sqrt".into()),
                ),
                p("lambda_value", Domain::Int { lo: 2, hi: 10 }, Value::Int(6)),
                p("grace_period", Domain::Int { lo: 50, hi: 350 }, Value::Int(50)),
                p("split_confidence", reals(&[1e-9, 1e-7, 1e-4, 1e-2]), Value::Real(1e-2)),
                p("tie_threshold", tie, Value::Real(0.05)),
                p("leaf_prediction", leaf, Value::Str("nba".into())),
                p("nb_threshold", ints(&[0, 10, 20, 30, 40, 50]), Value::Int(0)),
            ],
        },
        ComponentSpec {
            name: "LeveragingBagging",
            params: vec![
                p("model", base_models(), default_base()),
                p("n_models", Domain::Int { lo: 1, hi: 20 }, Value::Int(10)),
                p("w", Domain::Int { lo: 1, hi: 10 }, Value::Int(1)),
                p("adwin_delta", reals(&[0.001, 0.002, 0.005, 0.01]), Value::Real(0.002)),
                p(
                    "bagging_method",
                    strs(&BaggingMethod::ALL.map(BaggingMethod::as_str)),
                    Value::Str("bag".into()),
                ),
            ],
        },
        ComponentSpec {
            name: "OzaBagging",
            params: vec![
                p("model", base_models(), default_base()),
                p("n_models", Domain::Int { lo: 1, hi: 20 }, Value::Int(10)),
            ],
        },
        ComponentSpec {
            name: "OnlineAdaBoost",
            params: vec![
                p("model", base_models(), default_base()),
                p("n_models", Domain::Int { lo: 1, hi: 20 }, Value::Int(10)),
            ],
        },
    ]
}

/// Preprocessor entries with their grids.
pub fn preprocessor_specs() -> Vec<ComponentSpec> {
    let unit = reals(&grid(0.0, 1.0, 0.05));
    let plain = |name| ComponentSpec {
        name,
        params: vec![],
    };
    vec![
        plain("StandardScaler"),
        plain("AdaptiveStandardScaler"),
        plain("MinMaxScaler"),
        plain("MaxAbsScaler"),
        ComponentSpec {
            name: ROBUST,
            params: vec![
                p("with_centering", bools(), Value::Bool(true)),
                p("with_scaling", bools(), Value::Bool(true)),
                p("q_inf", unit.clone(), Value::Real(0.25)),
                p("q_sup", unit, Value::Real(0.75)),
            ],
        },
        ComponentSpec {
            name: "Normalizer",
            params: vec![p("order", strs(&["L1", "L2"]), Value::Str("L2".into()))],
        },
        ComponentSpec {
            name: "Binarizer",
            params: vec![p("threshold", reals(&grid(0.0, 1.0, 0.05)), Value::Real(0.0))],
        },
        ComponentSpec {
            name: POLYNOMIAL,
            params: vec![
                p("degree", ints(&[2, 3]), Value::Int(2)),
                p("interaction_only", bools(), Value::Bool(false)),
                p("include_bias", bools(), Value::Bool(false)),
            ],
        },
    ]
}

/// User restrictions applied on top of the full grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceOverrides {
    /// Classifier names to search over; all when empty.
    pub classifiers: Vec<String>,
    /// Preprocessor names to search over; all when `None`, none when empty.
    pub preprocessors: Option<Vec<String>>,
    pub max_preprocessors: Option<usize>,
    /// `component -> parameter -> value`; a pinned parameter is never varied.
    pub pins: BTreeMap<String, BTreeMap<String, Value>>,
}

/// The searchable pipeline space.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    classifiers: Vec<ComponentSpec>,
    preprocessors: Vec<ComponentSpec>,
    max_preprocessors: usize,
}

impl Default for ConfigSpace {
    fn default() -> Self {
        Self {
            classifiers: classifier_specs(),
            preprocessors: preprocessor_specs(),
            max_preprocessors: MAX_PREPROCESSORS,
        }
    }
}

impl ConfigSpace {
    /// Lists every way `overrides` is inconsistent with the grid.
    pub fn check_overrides(overrides: &SpaceOverrides) -> Vec<String> {
        let mut violations = Vec::new();
        let all: Vec<ComponentSpec> = classifier_specs()
            .into_iter()
            .chain(preprocessor_specs())
            .collect();
        for name in &overrides.classifiers {
            if !classifier_specs().iter().any(|c| c.name == name) {
                violations.push(format!("unknown classifier `{name}`"));
            }
        }
        for name in overrides.preprocessors.iter().flatten() {
            if !preprocessor_specs().iter().any(|c| c.name == name) {
                violations.push(format!("unknown preprocessor `{name}`"));
            }
        }
        if let Some(m) = overrides.max_preprocessors {
            if m > MAX_PREPROCESSORS {
                violations.push(format!(
                    "max_preprocessors = {m} exceeds the limit of {MAX_PREPROCESSORS}"
                ));
            }
        }
        for (component, params) in &overrides.pins {
            let Some(spec) = all.iter().find(|c| c.name == component) else {
                violations.push(format!("pins: unknown component `{component}`"));
                continue;
            };
            for (param, value) in params {
                match spec.param(param) {
                    None => violations.push(format!("pins: `{component}` has no parameter `{param}`")),
                    Some(ps) if !ps.domain.contains(value) => violations.push(format!(
                        "{component}.{param} = {value} outside range {}",
                        ps.domain
                    )),
                    Some(_) => {}
                }
            }
            if component == ROBUST {
                let get = |n: &str| {
                    params
                        .get(n)
                        .cloned()
                        .unwrap_or_else(|| spec.param(n).expect("robust grid").default.clone())
                };
                if let (Value::Real(lo), Value::Real(hi)) = (get("q_inf"), get("q_sup")) {
                    if params.contains_key("q_inf") && params.contains_key("q_sup") && lo >= hi {
                        violations.push(format!("RobustScaler.q_inf = {lo} must be below q_sup = {hi}"));
                    }
                }
            }
        }
        violations
    }

    pub fn with_overrides(overrides: &SpaceOverrides) -> Result<Self> {
        let violations = Self::check_overrides(overrides);
        if !violations.is_empty() {
            return Err(Error::Config(violations.join("; ")));
        }
        let pin = |mut spec: ComponentSpec| {
            if let Some(params) = overrides.pins.get(spec.name) {
                for ps in &mut spec.params {
                    if let Some(v) = params.get(ps.name) {
                        ps.domain = Domain::Choice(vec![v.clone()]);
                        ps.default = v.clone();
                    }
                }
            }
            spec
        };
        let classifiers: Vec<ComponentSpec> = classifier_specs()
            .into_iter()
            .filter(|c| {
                overrides.classifiers.is_empty() || overrides.classifiers.iter().any(|n| n == c.name)
            })
            .map(pin)
            .collect();
        let preprocessors: Vec<ComponentSpec> = preprocessor_specs()
            .into_iter()
            .filter(|c| {
                overrides
                    .preprocessors
                    .as_ref()
                    .is_none_or(|names| names.iter().any(|n| n == c.name))
            })
            .map(pin)
            .collect();
        let max_preprocessors = if preprocessors.is_empty() {
            0
        } else {
            overrides.max_preprocessors.unwrap_or(MAX_PREPROCESSORS)
        };
        Ok(Self {
            classifiers,
            preprocessors,
            max_preprocessors,
        })
    }

    pub fn classifiers(&self) -> &[ComponentSpec] {
        &self.classifiers
    }

    pub fn preprocessors(&self) -> &[ComponentSpec] {
        &self.preprocessors
    }

    fn classifier_spec(&self, name: &str) -> Option<&ComponentSpec> {
        self.classifiers.iter().find(|c| c.name == name)
    }

    fn preprocessor_spec(&self, name: &str) -> Option<&ComponentSpec> {
        self.preprocessors.iter().find(|c| c.name == name)
    }

    fn sample_component(spec: &ComponentSpec, rng: &mut ChaCha8Rng) -> Component {
        for _ in 0..RESAMPLE_ATTEMPTS {
            let c = Component {
                name: spec.name.to_string(),
                params: spec
                    .params
                    .iter()
                    .map(|ps| (ps.name.to_string(), ps.domain.sample(rng)))
                    .collect(),
            };
            if component_constraints(&c).is_ok() {
                return c;
            }
        }
        default_component(spec)
    }

    fn sample_classifier(&self, rng: &mut ChaCha8Rng) -> Component {
        let spec = self.classifiers.choose(rng).expect("at least one classifier");
        Self::sample_component(spec, rng)
    }

    /// A random preprocessor that may join `existing` without breaking the
    /// one-polynomial rule.
    fn sample_preprocessor(&self, existing: &[Component], rng: &mut ChaCha8Rng) -> Option<Component> {
        let has_poly = existing.iter().any(|c| c.name == POLYNOMIAL);
        let allowed: Vec<&ComponentSpec> = self
            .preprocessors
            .iter()
            .filter(|s| !(has_poly && s.name == POLYNOMIAL))
            .collect();
        let spec = allowed.choose(rng)?;
        Some(Self::sample_component(spec, rng))
    }

    fn perturb_param(&self, g: &PipelineGenotype, rng: &mut ChaCha8Rng) -> Option<PipelineGenotype> {
        // (slot, parameter) pairs that can take another value; slot
        // `preprocessors.len()` is the classifier.
        let mut targets = Vec::new();
        let n_pre = g.preprocessors.len();
        for (slot, comp) in g.preprocessors.iter().chain([&g.classifier]).enumerate() {
            let spec = if slot < n_pre {
                self.preprocessor_spec(&comp.name)
            } else {
                self.classifier_spec(&comp.name)
            }?;
            for ps in &spec.params {
                if !ps.domain.is_fixed() {
                    targets.push((slot, ps));
                }
            }
        }
        let &(slot, ps) = targets.choose(rng)?;
        for _ in 0..RESAMPLE_ATTEMPTS {
            let mut child = g.clone();
            let comp = if slot < n_pre {
                &mut child.preprocessors[slot]
            } else {
                &mut child.classifier
            };
            let current = comp.params.get(ps.name).cloned().unwrap_or(ps.default.clone());
            comp.params.insert(ps.name.to_string(), ps.domain.perturb(&current, rng));
            if component_constraints(comp).is_ok() {
                return Some(child);
            }
        }
        None
    }

    fn edit_preprocessors(&self, g: &PipelineGenotype, rng: &mut ChaCha8Rng) -> Option<PipelineGenotype> {
        if self.max_preprocessors == 0 || self.preprocessors.is_empty() {
            return None;
        }
        let mut child = g.clone();
        let n = child.preprocessors.len();
        // 0 = insert, 1 = remove, 2 = replace.
        let mut op = rng.random_range(0..3);
        if n == 0 {
            op = 0;
        } else if op == 0 && n >= self.max_preprocessors {
            op = 2;
        }
        match op {
            0 => {
                let new = self.sample_preprocessor(&child.preprocessors, rng)?;
                let at = rng.random_range(0..=n);
                child.preprocessors.insert(at, new);
            }
            1 => {
                child.preprocessors.remove(rng.random_range(0..n));
            }
            _ => {
                let at = rng.random_range(0..n);
                let rest: Vec<Component> = child
                    .preprocessors
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != at)
                    .map(|(_, c)| c.clone())
                    .collect();
                child.preprocessors[at] = self.sample_preprocessor(&rest, rng)?;
            }
        }
        Some(child)
    }
}

fn default_component(spec: &ComponentSpec) -> Component {
    Component {
        name: spec.name.to_string(),
        params: spec
            .params
            .iter()
            .map(|ps| (ps.name.to_string(), ps.default.clone()))
            .collect(),
    }
}

/// Cross-parameter rules inside one component.
fn component_constraints(c: &Component) -> Result<()> {
    if c.name == ROBUST {
        if let (Some(Value::Real(lo)), Some(Value::Real(hi))) =
            (c.params.get("q_inf"), c.params.get("q_sup"))
        {
            if lo >= hi {
                return Err(Error::Config(format!(
                    "RobustScaler q_inf {lo} must be below q_sup {hi}"
                )));
            }
        }
    }
    Ok(())
}

fn check_component(spec: &ComponentSpec, c: &Component) -> Result<()> {
    for ps in &spec.params {
        let v = c.params.get(ps.name).ok_or_else(|| {
            Error::Config(format!("{} is missing parameter {}", c.name, ps.name))
        })?;
        if !ps.domain.contains(v) {
            return Err(Error::Config(format!(
                "{}.{} = {v} outside range {}",
                c.name, ps.name, ps.domain
            )));
        }
    }
    if let Some(extra) = c.params.keys().find(|k| spec.param(k).is_none()) {
        return Err(Error::Config(format!("{} has no parameter {extra}", c.name)));
    }
    component_constraints(c)
}

fn get<'a>(c: &'a Component, name: &str) -> Result<&'a Value> {
    c.params
        .get(name)
        .ok_or_else(|| Error::Config(format!("{} is missing parameter {name}", c.name)))
}

fn get_int(c: &Component, name: &str) -> Result<i64> {
    match get(c, name)? {
        Value::Int(i) => Ok(*i),
        v => Err(Error::Config(format!("{}.{name} = {v} is not an integer", c.name))),
    }
}

fn get_real(c: &Component, name: &str) -> Result<f64> {
    match get(c, name)? {
        Value::Real(r) => Ok(*r),
        Value::Int(i) => Ok(*i as f64),
        v => Err(Error::Config(format!("{}.{name} = {v} is not a number", c.name))),
    }
}

fn get_bool(c: &Component, name: &str) -> Result<bool> {
    match get(c, name)? {
        Value::Bool(b) => Ok(*b),
        v => Err(Error::Config(format!("{}.{name} = {v} is not a boolean", c.name))),
    }
}

fn get_str<'a>(c: &'a Component, name: &str) -> Result<&'a str> {
    match get(c, name)? {
        Value::Str(s) => Ok(s),
        v => Err(Error::Config(format!("{}.{name} = {v} is not a string", c.name))),
    }
}

fn count(c: &Component, name: &str) -> Result<u32> {
    u32::try_from(get_int(c, name)?)
        .map_err(|_| Error::Config(format!("{}.{name} must be non-negative", c.name)))
}

pub fn build_preprocessor(c: &Component) -> Result<PreprocessorSpec> {
    Ok(match c.name.as_str() {
        "StandardScaler" => PreprocessorSpec::StandardScaler,
        "AdaptiveStandardScaler" => PreprocessorSpec::AdaptiveStandardScaler,
        "MinMaxScaler" => PreprocessorSpec::MinMaxScaler,
        "MaxAbsScaler" => PreprocessorSpec::MaxAbsScaler,
        ROBUST => PreprocessorSpec::RobustScaler {
            with_centering: get_bool(c, "with_centering")?,
            with_scaling: get_bool(c, "with_scaling")?,
            q_inf: get_real(c, "q_inf")?,
            q_sup: get_real(c, "q_sup")?,
        },
        "Normalizer" => PreprocessorSpec::Normalizer {
            order: match get_str(c, "order")? {
                "L1" => NormOrder::L1,
                "L2" => NormOrder::L2,
                other => {
                    return Err(Error::UnknownVariant {
                        kind: "norm order",
                        value: other.to_string(),
                    })
                }
            },
        },
        "Binarizer" => PreprocessorSpec::Binarizer {
            threshold: get_real(c, "threshold")?,
        },
        POLYNOMIAL => PreprocessorSpec::PolynomialExtender {
            degree: count(c, "degree")?,
            interaction_only: get_bool(c, "interaction_only")?,
            include_bias: get_bool(c, "include_bias")?,
        },
        other => {
            return Err(Error::UnknownVariant {
                kind: "preprocessor",
                value: other.to_string(),
            })
        }
    })
}

pub fn build_classifier(c: &Component, n_classes: usize, seed: u64) -> Result<Box<dyn Classifier>> {
    let tree = |c: &Component| -> Result<HoeffdingTreeParams> {
        Ok(HoeffdingTreeParams {
            grace_period: count(c, "grace_period")?,
            split_criterion: SplitCriterion::parse(get_str(c, "split_criterion")?)?,
            split_confidence: get_real(c, "split_confidence")?,
            tie_threshold: get_real(c, "tie_threshold")?,
            leaf_prediction: LeafPrediction::parse(get_str(c, "leaf_prediction")?)?,
            nb_threshold: 0,
        })
    };
    let n_models = |c: &Component| -> Result<usize> { Ok(count(c, "n_models")? as usize) };
    let base = |c: &Component| -> Result<BaseLearner> { get_str(c, "model")?.parse() };
    Ok(match c.name.as_str() {
        "HAT" => Box::new(HoeffdingAdaptiveTree::new(
            n_classes,
            HatParams {
                tree: tree(c)?,
                bootstrap_sampling: get_bool(c, "bootstrap_sampling")?,
                drift_window_threshold: count(c, "drift_window_threshold")?,
                adwin_confidence: get_real(c, "adwin_confidence")?,
            },
            seed,
        )),
        "ARF" => {
            let max_features = match get(c, "max_features")? {
                Value::Real(f) => MaxFeatures::Fraction(*f),
                Value::Str(s) if s == "sqrt" => MaxFeatures::Sqrt,
                Value::Str(s) if s == "log2" => MaxFeatures::Log2,
                Value::Str(s) if s == "None" => MaxFeatures::All,
                v => {
                    return Err(Error::UnknownVariant {
                        kind: "max_features",
                        value: v.to_string(),
                    })
                }
            };
            let params = ArfParams {
                n_models: n_models(c)?,
                max_features,
                lambda_value: get_real(c, "lambda_value")?,
                grace_period: count(c, "grace_period")?,
                split_confidence: get_real(c, "split_confidence")?,
                tie_threshold: get_real(c, "tie_threshold")?,
                leaf_prediction: LeafPrediction::parse(get_str(c, "leaf_prediction")?)?,
                nb_threshold: count(c, "nb_threshold")?,
            };
            Box::new(AdaptiveRandomForest::new(params, n_classes, seed)?)
        }
        "LeveragingBagging" => {
            let params = LeveragingParams {
                base: base(c)?,
                n_models: n_models(c)?,
                w: get_real(c, "w")?,
                adwin_delta: get_real(c, "adwin_delta")?,
                bagging_method: get_str(c, "bagging_method")?.parse()?,
            };
            Box::new(LeveragingBagging::new(params, n_classes, seed)?)
        }
        "OzaBagging" => Box::new(OzaBagging::new(base(c)?, n_models(c)?, n_classes, seed)?),
        "OnlineAdaBoost" => Box::new(OnlineAdaBoost::new(base(c)?, n_models(c)?, n_classes, seed)?),
        other => {
            return Err(Error::UnknownVariant {
                kind: "classifier",
                value: other.to_string(),
            })
        }
    })
}

/// Instantiates any genotype, whether or not it lies in a restricted space.
pub fn build_pipeline(g: &PipelineGenotype, task: &Task, seed: u64) -> Result<Pipeline> {
    let mut steps = Vec::with_capacity(g.preprocessors.len());
    let mut dim = task.n_features;
    for c in &g.preprocessors {
        let spec = build_preprocessor(c)?;
        if let PreprocessorSpec::PolynomialExtender {
            degree,
            interaction_only,
            include_bias,
        } = spec
        {
            dim = polynomial_output_dim(dim, degree, interaction_only, include_bias);
            if dim > MAX_POLYNOMIAL_OUTPUT {
                return Err(Error::Config(format!(
                    "polynomial expansion yields {dim} features, limit is {MAX_POLYNOMIAL_OUTPUT}"
                )));
            }
        }
        steps.push(spec.build());
    }
    let classifier = build_classifier(&g.classifier, task.n_classes, seed)?;
    Ok(Pipeline::new(steps, classifier))
}

impl SearchSpace for ConfigSpace {
    type Genotype = PipelineGenotype;

    fn sample(&self, rng: &mut ChaCha8Rng) -> PipelineGenotype {
        let n = rng.random_range(0..=self.max_preprocessors);
        let mut preprocessors = Vec::with_capacity(n);
        for _ in 0..n {
            if let Some(c) = self.sample_preprocessor(&preprocessors, rng) {
                preprocessors.push(c);
            }
        }
        PipelineGenotype {
            preprocessors,
            classifier: self.sample_classifier(rng),
            provenance: Provenance::Random,
        }
    }

    fn mutate(&self, g: &PipelineGenotype, rng: &mut ChaCha8Rng) -> PipelineGenotype {
        let first = rng.random_range(0..3);
        for offset in 0..3 {
            let child = match (first + offset) % 3 {
                0 => self.perturb_param(g, rng),
                1 => Some(PipelineGenotype {
                    classifier: self.sample_classifier(rng),
                    ..g.clone()
                }),
                _ => self.edit_preprocessors(g, rng),
            };
            if let Some(mut child) = child {
                child.provenance = Provenance::Mutated;
                return child;
            }
        }
        let mut child = g.clone();
        child.provenance = Provenance::Mutated;
        child
    }

    fn crossover(&self, a: &PipelineGenotype, b: &PipelineGenotype, rng: &mut ChaCha8Rng) -> PipelineGenotype {
        let classifier = if a.classifier.name == b.classifier.name {
            Component {
                name: a.classifier.name.clone(),
                params: a
                    .classifier
                    .params
                    .iter()
                    .map(|(k, va)| {
                        let v = match b.classifier.params.get(k) {
                            Some(vb) if rng.random_bool(0.5) => vb.clone(),
                            _ => va.clone(),
                        };
                        (k.clone(), v)
                    })
                    .collect(),
            }
        } else if rng.random_bool(0.5) {
            a.classifier.clone()
        } else {
            b.classifier.clone()
        };
        let longest = a.preprocessors.len().max(b.preprocessors.len());
        let mut preprocessors = a.preprocessors.clone();
        for _ in 0..RESAMPLE_ATTEMPTS {
            let cut = rng.random_range(0..=longest);
            let candidate: Vec<Component> = a.preprocessors[..cut.min(a.preprocessors.len())]
                .iter()
                .chain(&b.preprocessors[cut.min(b.preprocessors.len())..])
                .cloned()
                .collect();
            let polys = candidate.iter().filter(|c| c.name == POLYNOMIAL).count();
            if polys <= 1 && candidate.len() <= self.max_preprocessors {
                preprocessors = candidate;
                break;
            }
        }
        PipelineGenotype {
            preprocessors,
            classifier,
            provenance: Provenance::Crossover,
        }
    }

    fn validate(&self, g: &PipelineGenotype) -> Result<()> {
        if g.preprocessors.len() > self.max_preprocessors {
            return Err(Error::Config(format!(
                "{} preprocessors exceed the limit of {}",
                g.preprocessors.len(),
                self.max_preprocessors
            )));
        }
        if g.preprocessors.iter().filter(|c| c.name == POLYNOMIAL).count() > 1 {
            return Err(Error::Config("at most one PolynomialExtender".into()));
        }
        for c in &g.preprocessors {
            let spec = self.preprocessor_spec(&c.name).ok_or_else(|| Error::UnknownVariant {
                kind: "preprocessor",
                value: c.name.clone(),
            })?;
            check_component(spec, c)?;
        }
        let spec = self
            .classifier_spec(&g.classifier.name)
            .ok_or_else(|| Error::UnknownVariant {
                kind: "classifier",
                value: g.classifier.name.clone(),
            })?;
        check_component(spec, &g.classifier)
    }

    fn build(&self, g: &PipelineGenotype, task: &Task, seed: u64) -> Result<Box<dyn Model>> {
        Ok(Box::new(build_pipeline(g, task, seed)?))
    }

    /// HAT with its grid defaults, or the first enabled classifier's defaults.
    fn default_genotype(&self) -> PipelineGenotype {
        let spec = self
            .classifier_spec("HAT")
            .or(self.classifiers.first())
            .expect("at least one classifier");
        PipelineGenotype {
            preprocessors: vec![],
            classifier: default_component(spec),
            provenance: Provenance::Default,
        }
    }

    fn describe(&self, g: &PipelineGenotype) -> String {
        g.to_string()
    }
}
