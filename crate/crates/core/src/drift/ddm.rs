use super::{DriftDetector, Verdict};

/// Drift detection method: watches the running error rate `p` and its
/// binomial deviation `s`, relative to the lowest `p + s` seen so far.
#[derive(Debug, Clone)]
pub struct Ddm {
    n: u64,
    p: f64,
    p_min: f64,
    s_min: f64,
}

impl Default for Ddm {
    fn default() -> Self {
        Self {
            n: 0,
            p: 0.0,
            p_min: f64::INFINITY,
            s_min: f64::INFINITY,
        }
    }
}

impl Ddm {
    pub const WARM_UP: u64 = 30;
    const WARNING_LEVEL: f64 = 2.0;
    const DRIFT_LEVEL: f64 = 3.0;

    pub fn error_rate(&self) -> f64 {
        self.p
    }

    pub fn samples(&self) -> u64 {
        self.n
    }
}

impl DriftDetector for Ddm {
    fn update(&mut self, error: bool) -> Verdict {
        self.n += 1;
        let x = if error { 1.0 } else { 0.0 };
        self.p += (x - self.p) / self.n as f64;
        let s = (self.p * (1.0 - self.p) / self.n as f64).sqrt();
        if self.n < Self::WARM_UP {
            return Verdict::InControl;
        }
        if self.p + s <= self.p_min + self.s_min {
            self.p_min = self.p;
            self.s_min = s;
        }
        let level = self.p + s;
        if level > self.p_min + Self::DRIFT_LEVEL * self.s_min {
            self.reset();
            Verdict::Drift
        } else if level > self.p_min + Self::WARNING_LEVEL * self.s_min {
            Verdict::Warning
        } else {
            Verdict::InControl
        }
    }

    fn reset(&mut self) {
        *self = Self::default();
    }

    fn clone_box(&self) -> Box<dyn DriftDetector> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "DDM"
    }
}
