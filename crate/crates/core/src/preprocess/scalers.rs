use super::{DimGuard, Transformer};
use crate::error::Result;

/// Welford running mean and sum of squared deviations, per feature.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningMoments {
    pub fn update(&mut self, x: &[f64]) {
        if self.mean.is_empty() {
            self.mean = vec![0.0; x.len()];
            self.m2 = vec![0.0; x.len()];
        }
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *mean;
            *mean += delta / n;
            *m2 += delta * (v - *mean);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Population variance per feature.
    pub fn variance(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.m2.iter().map(|m2| m2.max(0.0) / n).collect()
    }
}

fn scaled(value: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        value / scale
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct StandardScaler {
    dims: DimGuard,
    moments: RunningMoments,
}

impl StandardScaler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn moments(&self) -> &RunningMoments {
        &self.moments
    }
}

impl Transformer for StandardScaler {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)?;
        self.moments.update(x);
        Ok(())
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        if self.moments.count() == 0 {
            return Ok(x.to_vec());
        }
        let var = self.moments.variance();
        Ok(x.iter()
            .zip(self.moments.mean())
            .zip(&var)
            .map(|((v, m), var)| scaled(v - m, var.sqrt()))
            .collect())
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "StandardScaler"
    }
}

/// Exponentially weighted mean and variance.
#[derive(Debug, Clone)]
pub struct AdaptiveStandardScaler {
    alpha: f64,
    dims: DimGuard,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl AdaptiveStandardScaler {
    pub const DEFAULT_ALPHA: f64 = 0.3;

    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            dims: DimGuard::default(),
            mean: Vec::new(),
            var: Vec::new(),
        }
    }
}

impl Transformer for AdaptiveStandardScaler {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        let first = !self.dims.is_set();
        self.dims.observe(x)?;
        if first {
            self.mean = x.to_vec();
            self.var = vec![0.0; x.len()];
            return Ok(());
        }
        let a = self.alpha;
        for ((mean, var), &v) in self.mean.iter_mut().zip(self.var.iter_mut()).zip(x) {
            let delta = v - *mean;
            *mean += a * delta;
            *var = (1.0 - a) * (*var + a * delta * delta);
        }
        Ok(())
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        if !self.dims.is_set() {
            return Ok(x.to_vec());
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((v, m), var)| scaled(v - m, var.sqrt()))
            .collect())
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "AdaptiveStandardScaler"
    }
}

#[derive(Debug, Clone, Default)]
pub struct MinMaxScaler {
    dims: DimGuard,
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }
}

impl Transformer for MinMaxScaler {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)?;
        if self.min.is_empty() {
            self.min = x.to_vec();
            self.max = x.to_vec();
            return Ok(());
        }
        for ((lo, hi), &v) in self.min.iter_mut().zip(self.max.iter_mut()).zip(x) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
        Ok(())
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        if self.min.is_empty() {
            return Ok(x.to_vec());
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| scaled(v - lo, hi - lo))
            .collect())
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "MinMaxScaler"
    }
}

#[derive(Debug, Clone, Default)]
pub struct MaxAbsScaler {
    dims: DimGuard,
    max_abs: Vec<f64>,
}

impl MaxAbsScaler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn max_abs(&self) -> &[f64] {
        &self.max_abs
    }
}

impl Transformer for MaxAbsScaler {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)?;
        if self.max_abs.is_empty() {
            self.max_abs = vec![0.0; x.len()];
        }
        for (m, &v) in self.max_abs.iter_mut().zip(x) {
            *m = m.max(v.abs());
        }
        Ok(())
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        if self.max_abs.is_empty() {
            return Ok(x.to_vec());
        }
        Ok(x.iter()
            .zip(&self.max_abs)
            .map(|(v, m)| scaled(*v, *m))
            .collect())
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "MaxAbsScaler"
    }
}
