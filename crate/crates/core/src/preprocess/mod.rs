//! Online feature transformers.
//!
//! Each transformer learns from one feature vector at a time and never
//! sees labels. Statistical scalers pass inputs through unchanged until
//! their first `learn_one`; rule-based transformers (normalizer, binarizer,
//! polynomial extender) apply their rule from the start.

mod robust;
mod scalers;
mod stateless;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::robust::{P2Quantile, RobustScaler, RunningQuantiles};
pub use self::scalers::{
    AdaptiveStandardScaler, MaxAbsScaler, MinMaxScaler, RunningMoments, StandardScaler,
};
pub use self::stateless::{
    polynomial_output_dim, Binarizer, NormOrder, Normalizer, PolynomialExtender,
    MAX_POLYNOMIAL_OUTPUT,
};

pub trait Transformer: Send {
    fn learn_one(&mut self, x: &[f64]) -> Result<()>;
    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn clone_box(&self) -> Box<dyn Transformer>;
    fn name(&self) -> &'static str;
}

impl Clone for Box<dyn Transformer> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Remembers the dimensionality of the first vector learned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct DimGuard(Option<usize>);

impl DimGuard {
    pub(crate) fn observe(&mut self, x: &[f64]) -> Result<()> {
        match self.0 {
            None => {
                self.0 = Some(x.len());
                Ok(())
            }
            Some(d) => Self::matches(d, x),
        }
    }

    pub(crate) fn check(&self, x: &[f64]) -> Result<()> {
        self.0.map_or(Ok(()), |d| Self::matches(d, x))
    }

    pub(crate) fn is_set(&self) -> bool {
        self.0.is_some()
    }

    fn matches(d: usize, x: &[f64]) -> Result<()> {
        if x.len() == d {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
            })
        }
    }
}

/// Fully parameterised preprocessor choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PreprocessorSpec {
    StandardScaler,
    AdaptiveStandardScaler,
    MinMaxScaler,
    MaxAbsScaler,
    RobustScaler {
        with_centering: bool,
        with_scaling: bool,
        q_inf: f64,
        q_sup: f64,
    },
    Normalizer {
        order: NormOrder,
    },
    Binarizer {
        threshold: f64,
    },
    PolynomialExtender {
        degree: u32,
        interaction_only: bool,
        include_bias: bool,
    },
}

impl PreprocessorSpec {
    pub fn build(&self) -> Box<dyn Transformer> {
        match *self {
            Self::StandardScaler => Box::new(StandardScaler::new()),
            Self::AdaptiveStandardScaler => Box::new(AdaptiveStandardScaler::new(
                AdaptiveStandardScaler::DEFAULT_ALPHA,
            )),
            Self::MinMaxScaler => Box::new(MinMaxScaler::new()),
            Self::MaxAbsScaler => Box::new(MaxAbsScaler::new()),
            Self::RobustScaler {
                with_centering,
                with_scaling,
                q_inf,
                q_sup,
            } => Box::new(RobustScaler::new(with_centering, with_scaling, q_inf, q_sup)),
            Self::Normalizer { order } => Box::new(Normalizer::new(order)),
            Self::Binarizer { threshold } => Box::new(Binarizer::new(threshold)),
            Self::PolynomialExtender {
                degree,
                interaction_only,
                include_bias,
            } => Box::new(PolynomialExtender::new(degree, interaction_only, include_bias)),
        }
    }
}
