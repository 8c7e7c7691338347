//! Adaptive windowing over values in `[0, 1]`.
//!
//! The window is an exponential histogram: row `r` holds buckets that each
//! summarise `2^r` consecutive values, newest first. After every insertion
//! all bucket boundaries are checked as cut points, and the oldest bucket is
//! dropped for as long as some split has significantly different means.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Adwin {
    delta: f64,
    /// Bucket sums per row, newest at the front.
    rows: Vec<VecDeque<f64>>,
    width: u64,
    total: f64,
    cuts: u64,
}

impl Adwin {
    /// Buckets kept per row before the two oldest are merged.
    pub const MAX_BUCKETS: usize = 5;
    const MIN_SUBWINDOW: u64 = 5;

    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            rows: Vec::new(),
            width: 0,
            total: 0.0,
            cuts: 0,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Number of cut events so far.
    pub fn cuts(&self) -> u64 {
        self.cuts
    }

    /// Mean of the retained values (0 when empty).
    pub fn estimation(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    /// Inserts `value` and returns whether the window was cut.
    pub fn update(&mut self, value: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitInterval(value));
        }
        Ok(self.insert(value))
    }

    pub fn update_bit(&mut self, bit: bool) -> bool {
        self.insert(if bit { 1.0 } else { 0.0 })
    }

    fn insert(&mut self, value: f64) -> bool {
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_front(value);
        self.width += 1;
        self.total += value;
        self.compress();
        let mut cut = false;
        while self.find_cut() {
            self.drop_oldest();
            cut = true;
        }
        if cut {
            self.cuts += 1;
        }
        cut
    }

    fn compress(&mut self) {
        let mut row = 0;
        while row < self.rows.len() && self.rows[row].len() > Self::MAX_BUCKETS {
            let a = self.rows[row].pop_back().unwrap();
            let b = self.rows[row].pop_back().unwrap();
            if row + 1 == self.rows.len() {
                self.rows.push(VecDeque::new());
            }
            self.rows[row + 1].push_front(a + b);
            row += 1;
        }
    }

    fn drop_oldest(&mut self) {
        while let Some(last) = self.rows.last() {
            if last.is_empty() {
                self.rows.pop();
            } else {
                break;
            }
        }
        let row = self.rows.len() - 1;
        let sum = self.rows[row].pop_back().unwrap();
        self.width -= 1u64 << row;
        self.total -= sum;
        if self.rows[row].is_empty() {
            self.rows.pop();
        }
        if self.width == 0 {
            self.total = 0.0;
        }
    }

    /// Scans split points from the oldest side.
    fn find_cut(&self) -> bool {
        if self.width < 2 * Self::MIN_SUBWINDOW {
            return false;
        }
        let n = self.width as f64;
        let log_term = (4.0 * n / self.delta).ln();
        let mut n0 = 0u64;
        let mut sum0 = 0.0;
        for (row, buckets) in self.rows.iter().enumerate().rev() {
            let size = 1u64 << row;
            for &sum in buckets.iter().rev() {
                n0 += size;
                sum0 += sum;
                let n1 = self.width - n0;
                if n1 < Self::MIN_SUBWINDOW {
                    return false;
                }
                if n0 < Self::MIN_SUBWINDOW {
                    continue;
                }
                let (a, b) = (n0 as f64, n1 as f64);
                let m = 1.0 / (1.0 / a + 1.0 / b);
                let eps = (log_term / (2.0 * m)).sqrt();
                let diff = (sum0 / a - (self.total - sum0) / b).abs();
                if diff > eps {
                    return true;
                }
            }
        }
        false
    }
}
