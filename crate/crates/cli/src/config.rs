//! Experiment files: one TOML document per run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use oaml::eval::Decimation;
use oaml::orchestrator::{OamlConfig, Strategy};
use oaml::search::{ConfigSpace, SpaceOverrides};
use oaml::stream::{DriftSpec, HyperplaneConfig, SeaConfig, StreamSchema};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "oaml-basic")]
    OamlBasic,
    #[serde(rename = "oaml-ensemble")]
    OamlEnsemble,
    #[serde(rename = "oaml-modelstore")]
    OamlModelStore,
    #[serde(rename = "baseline-levbag")]
    BaselineLevBag,
    #[serde(rename = "baseline-hat")]
    BaselineHat,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::OamlBasic => "oaml-basic",
            Self::OamlEnsemble => "oaml-ensemble",
            Self::OamlModelStore => "oaml-modelstore",
            Self::BaselineLevBag => "baseline-levbag",
            Self::BaselineHat => "baseline-hat",
        }
    }

    pub fn strategy(self) -> Option<Strategy> {
        match self {
            Self::OamlBasic => Some(Strategy::Basic),
            Self::OamlEnsemble => Some(Strategy::Ensemble),
            Self::OamlModelStore => Some(Strategy::ModelStore),
            Self::BaselineLevBag | Self::BaselineHat => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeaDrift {
    Stationary,
    #[default]
    Abrupt,
    Mixed,
    /// Theta 7, then 9.5, then 7 again, switching abruptly at each third.
    Cyclic,
}

fn default_sea_noise() -> f64 {
    0.1
}

fn default_hyperplane_noise() -> f64 {
    0.05
}

fn default_n_features() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_concept() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSpec {
    Sea {
        #[serde(default)]
        drift: SeaDrift,
        length: u64,
        #[serde(default = "default_sea_noise")]
        noise: f64,
        /// Width of the gradual drifts for `drift = "mixed"`; a fifth of
        /// the stream when absent.
        gradual_width: Option<u64>,
        /// Concept for `drift = "stationary"`.
        #[serde(default = "default_concept")]
        concept: u8,
        /// Fixes the stream realization independently of the run seed.
        seed: Option<u64>,
    },
    Hyperplane {
        length: u64,
        #[serde(default = "default_n_features")]
        n_features: usize,
        #[serde(default = "default_hyperplane_noise")]
        noise: f64,
        mag_change: Option<f64>,
        sigma: Option<f64>,
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
        n_features: usize,
        class_labels: Vec<i64>,
        #[serde(default = "default_true")]
        has_header: bool,
    },
}

/// A fully resolved stream source.
#[derive(Debug, Clone)]
pub enum StreamSource {
    Sea(SeaConfig),
    Hyperplane(HyperplaneConfig),
    Csv { path: PathBuf, schema: StreamSchema, has_header: bool },
}

impl StreamSource {
    pub fn n_classes(&self) -> usize {
        match self {
            Self::Sea(_) | Self::Hyperplane(_) => 2,
            Self::Csv { schema, .. } => schema.n_classes(),
        }
    }

    /// Short human-readable description, written to `summary.json`.
    pub fn describe(&self) -> String {
        match self {
            Self::Sea(c) => format!(
                "SEA length {} noise {} seed {} schedule {:?}",
                c.length, c.noise_rate, c.seed, c.concept_schedule
            ),
            Self::Hyperplane(c) => format!(
                "Hyperplane d={} length {} noise {} mag_change {} sigma {} seed {}",
                c.n_features, c.length, c.noise_rate, c.mag_change, c.sigma, c.seed
            ),
            Self::Csv { path, .. } => format!("CSV {}", path.display()),
        }
    }
}

impl StreamSpec {
    pub fn resolve(&self, run_seed: u64) -> oaml::Result<StreamSource> {
        Ok(match self {
            Self::Sea {
                drift,
                length,
                noise,
                gradual_width,
                concept,
                seed,
            } => {
                let seed = seed.unwrap_or(run_seed);
                let config = match drift {
                    SeaDrift::Stationary => SeaConfig::stationary(*concept, *noise, *length, seed),
                    SeaDrift::Abrupt => SeaConfig::abrupt(*length, *noise, seed),
                    SeaDrift::Mixed => {
                        SeaConfig::mixed(*length, gradual_width.unwrap_or(length / 5).max(1), *noise, seed)
                    }
                    SeaDrift::Cyclic => SeaConfig {
                        concept_schedule: vec![
                            DriftSpec::abrupt(length / 3, 3, 4),
                            DriftSpec::abrupt(2 * length / 3, 4, 3),
                        ],
                        initial_concept: 3,
                        noise_rate: *noise,
                        length: *length,
                        seed,
                    },
                };
                config.validate()?;
                StreamSource::Sea(config)
            }
            Self::Hyperplane {
                length,
                n_features,
                noise,
                mag_change,
                sigma,
                seed,
            } => {
                let mut config = HyperplaneConfig::gradual(*n_features, *noise, *length, seed.unwrap_or(run_seed));
                if let Some(m) = mag_change {
                    config.mag_change = *m;
                }
                if let Some(s) = sigma {
                    config.sigma = *s;
                }
                config.validate()?;
                StreamSource::Hyperplane(config)
            }
            Self::Csv {
                path,
                n_features,
                class_labels,
                has_header,
            } => StreamSource::Csv {
                path: path.clone(),
                schema: StreamSchema::new(*n_features, class_labels.clone())?,
                has_header: *has_header,
            },
        })
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    pub stream: StreamSpec,
    /// Controller settings; `strategy` comes from `method`.
    #[serde(default)]
    pub oaml: OamlConfig,
    /// Restrictions and pins on the pipeline search space.
    #[serde(default)]
    pub space: SpaceOverrides,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub trace_decimation: Decimation,
}

pub const PRESETS: [(&str, &str); 7] = [
    ("desk-sea-abrupt", include_str!("../presets/desk-sea-abrupt.toml")),
    ("desk-sea-mixed", include_str!("../presets/desk-sea-mixed.toml")),
    ("desk-sea-cyclic", include_str!("../presets/desk-sea-cyclic.toml")),
    ("desk-hyperplane", include_str!("../presets/desk-hyperplane.toml")),
    ("full-sea-abrupt", include_str!("../presets/full-sea-abrupt.toml")),
    ("full-sea-mixed", include_str!("../presets/full-sea-mixed.toml")),
    ("full-hyperplane", include_str!("../presets/full-hyperplane.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Raw TOML text plus where it came from, for error messages.
pub struct Source {
    pub origin: String,
    pub text: String,
    /// Directory relative paths inside the file resolve against.
    pub base: Option<PathBuf>,
}

impl Source {
    pub fn file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Ok(Self {
            origin: path.display().to_string(),
            text,
            base: path.parent().map(Path::to_path_buf),
        })
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, text)| Self {
                origin: format!("preset {n}"),
                text: (*text).to_string(),
                base: None,
            })
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset {name:?}; available: {}",
                    preset_names().join(", ")
                ))
            })
    }

    /// Resolves a `--config` argument: an existing file, otherwise a preset
    /// name.
    pub fn locate(arg: &str) -> Result<Self, CliError> {
        let path = Path::new(arg);
        if path.exists() || PRESETS.iter().all(|(n, _)| *n != arg) {
            Self::file(path)
        } else {
            Self::preset(arg)
        }
    }

    pub fn parse(&self) -> Result<ExperimentConfig, CliError> {
        let raw: toml::Table = toml::from_str(&self.text)
            .map_err(|e| CliError::Config(format!("{}: {e}", self.origin)))?;
        if raw
            .get("oaml")
            .and_then(|o| o.as_table())
            .is_some_and(|o| o.contains_key("strategy"))
        {
            return Err(CliError::Config(format!(
                "{}: oaml.strategy: set the strategy through `method`",
                self.origin
            )));
        }
        let mut config: ExperimentConfig = toml::from_str(&self.text)
            .map_err(|e| CliError::Config(format!("{}: {e}", self.origin)))?;
        if let (Some(base), StreamSpec::Csv { path, .. }) = (&self.base, &mut config.stream) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        config.sync_strategy();
        Ok(config)
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        Source {
            origin: "config".into(),
            text: text.to_string(),
            base: None,
        }
        .parse()
    }
}

impl ExperimentConfig {
    /// Copies the strategy implied by `method` into the controller config.
    pub fn sync_strategy(&mut self) {
        if let Some(s) = self.method.strategy() {
            self.oaml.strategy = s;
        }
        self.oaml.seed = self.seed;
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.oaml.seed = seed;
    }

    /// Every problem with this config, each prefixed by the field it
    /// concerns. Empty when the config is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.oaml.violations().into_iter().map(|m| format!("oaml: {m}")).collect();
        v.extend(ConfigSpace::check_overrides(&self.space).into_iter().map(|m| format!("space: {m}")));
        match self.stream.resolve(self.seed) {
            Err(e) => v.push(format!("stream: {e}")),
            Ok(StreamSource::Csv { path, .. }) => {
                if !path.is_file() {
                    v.push(format!("stream.path: CSV file not found: {}", path.display()));
                }
            }
            Ok(StreamSource::Sea(c)) => {
                if c.length <= self.oaml.n_0 as u64 {
                    v.push(format!(
                        "stream.length: {} samples leave nothing after n_0 = {}",
                        c.length, self.oaml.n_0
                    ));
                }
            }
            Ok(StreamSource::Hyperplane(c)) => {
                if c.length <= self.oaml.n_0 as u64 {
                    v.push(format!(
                        "stream.length: {} samples leave nothing after n_0 = {}",
                        c.length, self.oaml.n_0
                    ));
                }
            }
        }
        v
    }
}
