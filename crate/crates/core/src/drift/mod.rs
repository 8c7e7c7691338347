//! Drift detectors over the 0/1 error stream of a predictor.

mod adwin;
mod ddm;
mod eddm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::adwin::Adwin;
pub use self::ddm::Ddm;
pub use self::eddm::Eddm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    InControl,
    Warning,
    Drift,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InControl => "in_control",
            Self::Warning => "warning",
            Self::Drift => "drift",
        }
    }
}

/// A detector consumes one correctness flag per prediction.
///
/// After returning [`Verdict::Drift`] the detector has already reset
/// itself, so the next update starts from fresh statistics.
pub trait DriftDetector: Send {
    fn update(&mut self, error: bool) -> Verdict;
    fn reset(&mut self);
    fn clone_box(&self) -> Box<dyn DriftDetector>;
    fn name(&self) -> &'static str;
}

impl Clone for Box<dyn DriftDetector> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// ADWIN wrapped as a detector: any window cut is a drift.
#[derive(Debug, Clone)]
pub struct AdwinDetector {
    window: Adwin,
}

impl AdwinDetector {
    pub fn new(delta: f64) -> Self {
        Self {
            window: Adwin::new(delta),
        }
    }

    pub fn window(&self) -> &Adwin {
        &self.window
    }
}

impl DriftDetector for AdwinDetector {
    fn update(&mut self, error: bool) -> Verdict {
        if self.window.update_bit(error) {
            Verdict::Drift
        } else {
            Verdict::InControl
        }
    }

    fn reset(&mut self) {
        self.window = Adwin::new(self.window.delta());
    }

    fn clone_box(&self) -> Box<dyn DriftDetector> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "ADWIN"
    }
}

/// Never signals anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDetector;

impl DriftDetector for NoDetector {
    fn update(&mut self, _error: bool) -> Verdict {
        Verdict::InControl
    }

    fn reset(&mut self) {}

    fn clone_box(&self) -> Box<dyn DriftDetector> {
        Box::new(*self)
    }

    fn name(&self) -> &'static str {
        "off"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Ddm,
    Eddm,
    Adwin,
    Off,
}

impl DetectorKind {
    pub const ADWIN_DELTA: f64 = 0.002;

    pub fn build(self) -> Box<dyn DriftDetector> {
        match self {
            Self::Ddm => Box::new(Ddm::default()),
            Self::Eddm => Box::new(Eddm::default()),
            Self::Adwin => Box::new(AdwinDetector::new(Self::ADWIN_DELTA)),
            Self::Off => Box::new(NoDetector),
        }
    }

    /// Parameters in effect, for run metadata.
    pub fn describe(self) -> String {
        match self {
            Self::Ddm => format!(
                "DDM(warm_up={}, warning=2σ, drift=3σ)",
                Ddm::WARM_UP
            ),
            Self::Eddm => format!(
                "EDDM(alpha={}, beta={}, min_errors={})",
                Eddm::ALPHA,
                Eddm::BETA,
                Eddm::MIN_ERRORS
            ),
            Self::Adwin => format!("ADWIN(delta={}, M={})", Self::ADWIN_DELTA, Adwin::MAX_BUCKETS),
            Self::Off => "off".to_string(),
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ddm" => Ok(Self::Ddm),
            "eddm" => Ok(Self::Eddm),
            "adwin" => Ok(Self::Adwin),
            "off" | "none" => Ok(Self::Off),
            _ => Err(Error::UnknownVariant {
                kind: "drift detector",
                value: s.to_string(),
            }),
        }
    }
}
