use serde::{Deserialize, Serialize};

use super::{DimGuard, Transformer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    L1,
    L2,
}

/// Scales each vector to unit norm; the zero vector stays zero.
#[derive(Debug, Clone)]
pub struct Normalizer {
    order: NormOrder,
    dims: DimGuard,
}

impl Normalizer {
    pub fn new(order: NormOrder) -> Self {
        Self {
            order,
            dims: DimGuard::default(),
        }
    }
}

impl Transformer for Normalizer {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        let norm = match self.order {
            NormOrder::L1 => x.iter().map(|v| v.abs()).sum::<f64>(),
            NormOrder::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        };
        if norm > 0.0 {
            Ok(x.iter().map(|v| v / norm).collect())
        } else {
            Ok(vec![0.0; x.len()])
        }
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "Normalizer"
    }
}

#[derive(Debug, Clone)]
pub struct Binarizer {
    threshold: f64,
    dims: DimGuard,
}

impl Binarizer {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            dims: DimGuard::default(),
        }
    }
}

impl Transformer for Binarizer {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        Ok(x.iter()
            .map(|&v| if v > self.threshold { 1.0 } else { 0.0 })
            .collect())
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "Binarizer"
    }
}

/// Upper bound on the number of generated features.
pub const MAX_POLYNOMIAL_OUTPUT: usize = 2048;

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| {
        acc.saturating_mul(n - i) / (i + 1)
    })
}

/// Number of output features for `dim` inputs.
pub fn polynomial_output_dim(
    dim: usize,
    degree: u32,
    interaction_only: bool,
    include_bias: bool,
) -> usize {
    let degree = degree as usize;
    let terms = if interaction_only {
        (1..=degree).map(|j| binomial(dim, j)).sum::<usize>()
    } else {
        binomial(dim + degree, degree) - 1
    };
    terms + usize::from(include_bias)
}

/// All monomials up to `degree`, ordered by degree and then lexicographically.
#[derive(Debug, Clone)]
pub struct PolynomialExtender {
    degree: u32,
    interaction_only: bool,
    include_bias: bool,
    dims: DimGuard,
    terms: Vec<Vec<usize>>,
}

impl PolynomialExtender {
    pub fn new(degree: u32, interaction_only: bool, include_bias: bool) -> Self {
        Self {
            degree,
            interaction_only,
            include_bias,
            dims: DimGuard::default(),
            terms: Vec::new(),
        }
    }

    fn enumerate(&self, dim: usize) -> Result<Vec<Vec<usize>>> {
        let size = polynomial_output_dim(dim, self.degree, self.interaction_only, false);
        if size + usize::from(self.include_bias) > MAX_POLYNOMIAL_OUTPUT {
            return Err(Error::Model(format!(
                "polynomial expansion of {dim} features to degree {} exceeds {MAX_POLYNOMIAL_OUTPUT} outputs",
                self.degree
            )));
        }
        let mut terms = Vec::with_capacity(size);
        let mut frontier: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
        for _ in 0..self.degree {
            terms.extend(frontier.iter().cloned());
            let mut next = Vec::new();
            for term in &frontier {
                let last = *term.last().unwrap();
                let start = if self.interaction_only { last + 1 } else { last };
                for j in start..dim {
                    let mut t = term.clone();
                    t.push(j);
                    next.push(t);
                }
            }
            frontier = next;
        }
        Ok(terms)
    }

    fn expand(&self, terms: &[Vec<usize>], x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(terms.len() + 1);
        if self.include_bias {
            out.push(1.0);
        }
        out.extend(terms.iter().map(|t| t.iter().map(|&i| x[i]).product::<f64>()));
        out
    }
}

impl Transformer for PolynomialExtender {
    fn learn_one(&mut self, x: &[f64]) -> Result<()> {
        self.dims.observe(x)?;
        if self.terms.is_empty() {
            self.terms = self.enumerate(x.len())?;
        }
        Ok(())
    }

    fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dims.check(x)?;
        if self.terms.is_empty() {
            let terms = self.enumerate(x.len())?;
            return Ok(self.expand(&terms, x));
        }
        Ok(self.expand(&self.terms, x))
    }

    fn clone_box(&self) -> Box<dyn Transformer> {
        Box::new(self.clone())
    }

    fn name(&self) -> &'static str {
        "PolynomialExtender"
    }
}
