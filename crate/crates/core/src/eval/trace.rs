//! Per-sample run trace and its CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::drift::Verdict;
use crate::error::Result;
use crate::stream::ClassId;

pub const TRACE_HEADER: [&str; 9] = [
    "index",
    "prediction",
    "truth",
    "acc_cum",
    "acc_win",
    "verdict",
    "source",
    "retrain",
    "classifier",
];

/// Where the active online model came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    /// The latest search champion.
    AutoML,
    /// The backup ensemble.
    Ensemble,
    /// A pipeline recalled from the model store.
    ModelStore,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AutoML => "AutoML",
            Self::Ensemble => "Ensemble",
            Self::ModelStore => "ModelStore",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub index: u64,
    pub prediction: ClassId,
    pub truth: ClassId,
    pub acc_cum: f64,
    pub acc_win: f64,
    pub verdict: Verdict,
    pub source: Source,
    /// Set on the sample that triggered a re-search.
    pub retrain: bool,
    pub classifier: String,
}

/// Which online samples are written out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decimation {
    /// Every sample up to the 100000th online sample, then every 10th.
    #[default]
    Auto,
    Full,
    Every(u64),
}

impl Decimation {
    pub const AUTO_FULL_UNTIL: u64 = 100_000;

    /// Whether the `ordinal`-th online sample (1-based) is kept.
    pub fn keep(self, ordinal: u64) -> bool {
        match self {
            Self::Full => true,
            Self::Every(n) => n <= 1 || ordinal.is_multiple_of(n),
            Self::Auto => ordinal <= Self::AUTO_FULL_UNTIL || ordinal.is_multiple_of(10),
        }
    }
}

pub struct TraceWriter<W: Write> {
    writer: csv::Writer<W>,
    decimation: Decimation,
    seen: u64,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(inner: W, decimation: Decimation) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(TRACE_HEADER)?;
        Ok(Self {
            writer,
            decimation,
            seen: 0,
        })
    }

    /// Writes `record` unless decimation drops it. Returns whether it was kept.
    pub fn write(&mut self, record: &TraceRecord) -> Result<bool> {
        self.seen += 1;
        if !self.decimation.keep(self.seen) {
            return Ok(false);
        }
        self.writer.write_record([
            record.index.to_string(),
            record.prediction.to_string(),
            record.truth.to_string(),
            format!("{:.6}", record.acc_cum),
            format!("{:.6}", record.acc_win),
            record.verdict.as_str().to_string(),
            record.source.as_str().to_string(),
            u8::from(record.retrain).to_string(),
            record.classifier.clone(),
        ])?;
        Ok(true)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush().map_err(|e| crate::Error::Csv(e.into()))
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| crate::Error::Csv(e.into_error().into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(index: u64) -> TraceRecord {
        TraceRecord {
            index,
            prediction: 1,
            truth: 0,
            acc_cum: 0.5,
            acc_win: 2.0 / 3.0,
            verdict: Verdict::Warning,
            source: Source::Ensemble,
            retrain: true,
            classifier: "a,b".into(),
        }
    }

    #[test]
    fn csv_layout() {
        let mut w = TraceWriter::new(Vec::new(), Decimation::Full).unwrap();
        w.write(&record(1001)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(
            text,
            "index,prediction,truth,acc_cum,acc_win,verdict,source,retrain,classifier\n\
             1001,1,0,0.500000,0.666667,warning,Ensemble,1,\"a,b\"\n"
        );
    }

    #[test]
    fn decimation_rules() {
        assert!(Decimation::Auto.keep(99_999));
        assert!(Decimation::Auto.keep(100_000));
        assert!(!Decimation::Auto.keep(100_001));
        assert!(Decimation::Auto.keep(100_010));
        assert!(Decimation::Every(5).keep(5));
        assert!(!Decimation::Every(5).keep(6));
    }
}
