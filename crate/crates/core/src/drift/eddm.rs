use super::{DriftDetector, Verdict};

/// Early drift detection method: tracks the mean and deviation of the
/// distance between consecutive errors and alarms when `mean + 2·std`
/// falls well below its historical maximum.
#[derive(Debug, Clone, Default)]
pub struct Eddm {
    n: u64,
    errors: u64,
    last_error: u64,
    mean: f64,
    m2: f64,
    max_level: f64,
}

impl Eddm {
    pub const ALPHA: f64 = 0.95;
    pub const BETA: f64 = 0.90;
    pub const MIN_ERRORS: u64 = 30;

    pub fn errors(&self) -> u64 {
        self.errors
    }

    /// `(mean + 2·std) / max(mean + 2·std)`, or 1 before any error.
    pub fn ratio(&self) -> f64 {
        if self.errors == 0 || self.max_level == 0.0 {
            return 1.0;
        }
        self.level() / self.max_level
    }

    fn level(&self) -> f64 {
        let std = (self.m2 / self.errors as f64).sqrt();
        self.mean + 2.0 * std
    }
}

impl DriftDetector for Eddm {
    fn update(&mut self, error: bool) -> Verdict {
        self.n += 1;
        if !error {
            return Verdict::InControl;
        }
        self.errors += 1;
        let distance = (self.n - self.last_error) as f64;
        self.last_error = self.n;
        let delta = distance - self.mean;
        self.mean += delta / self.errors as f64;
        self.m2 += delta * (distance - self.mean);
        let level = self.level();
        if level > self.max_level {
            self.max_level = level;
        }
        if self.errors < Self::MIN_ERRORS {
            return Verdict::InControl;
        }
        let ratio = level / self.max_level;
        if ratio < Self::BETA {
            self.reset();
            Verdict::Drift
        } else if ratio < Self::ALPHA {
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
        "EDDM"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_errors_never_drift() {
        let mut d = Eddm::default();
        for i in 1..=100_000u64 {
            assert_ne!(d.update(i % 10 == 0), Verdict::Drift);
        }
        assert!((d.ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inactive_before_thirty_errors() {
        let mut d = Eddm::default();
        // wildly varying spacing, still silent for the first 29 errors
        let mut errors = 0;
        let mut i = 0u64;
        while errors < 29 {
            i += 1;
            let error = i.is_multiple_of(1 + (errors * 37) % 50);
            if error {
                errors += 1;
            }
            assert_eq!(d.update(error), Verdict::InControl);
        }
    }
}
