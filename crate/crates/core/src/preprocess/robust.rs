use super::{DimGuard, Transformer};
use crate::error::Result;

/// P² single-quantile estimator (five markers, constant memory).
///
/// `p == 0` and `p == 1` track the exact minimum and maximum.
#[derive(Debug, Clone)]
pub struct P2Quantile {
    p: f64,
    count: usize,
    heights: [f64; 5],
    positions: [f64; 5],
    desired: [f64; 5],
    increments: [f64; 5],
}

impl P2Quantile {
    pub fn new(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        Self {
            p,
            count: 0,
            heights: [0.0; 5],
            positions: [1.0, 2.0, 3.0, 4.0, 5.0],
            desired: [1.0, 1.0 + 2.0 * p, 1.0 + 4.0 * p, 3.0 + 2.0 * p, 5.0],
            increments: [0.0, p / 2.0, p, (1.0 + p) / 2.0, 1.0],
        }
    }

    pub fn quantile(&self) -> f64 {
        self.p
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn update(&mut self, x: f64) {
        if self.count < 5 {
            self.heights[self.count] = x;
            self.count += 1;
            if self.count == 5 {
                self.heights.sort_by(f64::total_cmp);
            }
            return;
        }
        self.count += 1;
        let h = &mut self.heights;
        let k = if x < h[0] {
            h[0] = x;
            0
        } else if x >= h[4] {
            h[4] = x;
            3
        } else {
            (0..4).find(|&i| h[i] <= x && x < h[i + 1]).unwrap_or(3)
        };
        for pos in &mut self.positions[k + 1..] {
            *pos += 1.0;
        }
        for (d, inc) in self.desired.iter_mut().zip(&self.increments) {
            *d += inc;
        }
        if self.p == 0.0 || self.p == 1.0 {
            return;
        }
        for i in 1..4 {
            let n = &self.positions;
            let d = self.desired[i] - n[i];
            if (d >= 1.0 && n[i + 1] - n[i] > 1.0) || (d <= -1.0 && n[i - 1] - n[i] < -1.0) {
                let d = d.signum();
                let candidate = self.parabolic(i, d);
                let h = &self.heights;
                self.heights[i] = if h[i - 1] < candidate && candidate < h[i + 1] {
                    candidate
                } else {
                    self.linear(i, d)
                };
                self.positions[i] += d;
            }
        }
    }

    fn parabolic(&self, i: usize, d: f64) -> f64 {
        let (q, n) = (&self.heights, &self.positions);
        q[i] + d / (n[i + 1] - n[i - 1])
            * ((n[i] - n[i - 1] + d) * (q[i + 1] - q[i]) / (n[i + 1] - n[i])
                + (n[i + 1] - n[i] - d) * (q[i] - q[i - 1]) / (n[i] - n[i - 1]))
    }

    fn linear(&self, i: usize, d: f64) -> f64 {
        let (q, n) = (&self.heights, &self.positions);
        let j = if d > 0.0 { i + 1 } else { i - 1 };
        q[i] + d * (q[j] - q[i]) / (n[j] - n[i])
    }

    /// Current estimate; `None` before the first observation.
    pub fn estimate(&self) -> Option<f64> {
        match self.count {
            0 => None,
            n if n < 5 => {
                let mut seen = self.heights[..n].to_vec();
                seen.sort_by(f64::total_cmp);
                let rank = (self.p * (n - 1) as f64).round() as usize;
                Some(seen[rank])
            }
            _ if self.p == 0.0 => Some(self.heights[0]),
            _ if self.p == 1.0 => Some(self.heights[4]),
            _ => Some(self.heights[2]),
        }
    }
}

/// Lower quantile, median and upper quantile for one feature.
#[derive(Debug, Clone)]
pub struct RunningQuantiles {
    lower: P2Quantile,
    median: P2Quantile,
    upper: P2Quantile,
}

impl RunningQuantiles {
    pub fn new(q_inf: f64, q_sup: f64) -> Self {
        Self {
            lower: P2Quantile::new(q_inf),
            median: P2Quantile::new(0.5),
            upper: P2Quantile::new(q_sup),
        }
    }

    pub fn update(&mut self, x: f64) {
        self.lower.update(x);
        self.median.update(x);
        self.upper.update(x);
    }

    /// `(q_inf, median, q_sup)` estimates, rearranged so that they are
    /// monotone in their quantile levels.
    pub fn estimates(&self) -> Option<(f64, f64, f64)> {
        let mut pairs = [
            (self.lower.quantile(), self.lower.estimate()?),
            (self.median.quantile(), self.median.estimate()?),
            (self.upper.quantile(), self.upper.estimate()?),
        ];
        let mut values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        values.sort_by(f64::total_cmp);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0));
        for (slot, &idx) in order.iter().enumerate() {
            pairs[idx].1 = values[slot];
        }
        Some((pairs[0].1, pairs[1].1, pairs[2].1))
    }
}

/// Centres on the running median and scales by the inter-quantile range.
#[derive(Debug, Clone)]
pub struct RobustScaler {
    with_centering: bool,
    with_scaling: bool,
    q_inf: f64,
    q_sup: f64,
    dims: DimGuard,
    quantiles: Vec<RunningQuantiles>,
}

impl RobustScaler {
    pub fn new(with_centering: bool, with_scaling: bool, q_inf: f64, q_sup: f64) -> Self {
        let (q_inf, q_sup) = if q_inf <= q_sup {
            (q_inf, q_sup)
        } else {
            (q_sup, q_inf)
        };
        Self {
            with_centering,
            with_scaling,
            q_inf,
            q_sup,
            dims: DimGuard::default(),
            quantiles: Vec::new(),
        }
    }

    pub fn quantiles(&self) -> &[RunningQuantiles] {
        &self.quantiles
    }
}

impl Transformer for RobustScaler {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)?;
        if self.quantiles.is_empty() {
            self.quantiles = x
                .iter()
                .map(|_| RunningQuantiles::new(self.q_inf, self.q_sup))
                .collect();
        }
        for (q, &v) in self.quantiles.iter_mut().zip(x) {
            q.update(v);
        }
        Ok(())
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        if self.quantiles.is_empty() {
            return Ok(x.to_vec());
        }
        Ok(x.iter()
            .zip(&self.quantiles)
            .map(|(&v, q)| {
                let (lo, median, hi) = q.estimates().unwrap_or((0.0, 0.0, 0.0));
                let centred = if self.with_centering { v - median } else { v };
                if !self.with_scaling {
                    centred
                } else if hi - lo > 0.0 {
                    centred / (hi - lo)
                } else {
                    0.0
                }
            })
            .collect())
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "RobustScaler"
    }
}
