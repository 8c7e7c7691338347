use crate::error::{Error, Result};
use crate::learners::{argmax, vote};
use crate::pipeline::Model;
use crate::stream::ClassId;

/// Equal-weight majority vote over member predictions; ties go to the
/// lowest class id.
pub fn majority(predictions: &[ClassId]) -> Result<ClassId> {
    if predictions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n_classes = predictions.iter().max().map_or(1, |m| m + 1);
    Ok(argmax(&vote(predictions.iter().map(|&p| (p, 1.0)), n_classes)))
}

/// A committee of independently trained pipelines.
#[derive(Clone)]
pub struct EnsembleModel {
    members: Vec<Box<dyn Model>>,
}

impl EnsembleModel {
    pub fn new(members: Vec<Box<dyn Model>>) -> Self {
        Self { members }
    }

    pub fn members(&self) -> &[Box<dyn Model>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub(crate) fn ensemble_name<'a>(names: impl IntoIterator<Item = &'a str>) -> String {
    format!("Ensemble[{}]", names.into_iter().collect::<Vec<_>>().join(";"))
}

impl Model for EnsembleModel {
    fn predict_one(&self, x: &[f64]) -> Result<ClassId> {
        let predictions = self
            .members
            .iter()
            .map(|m| m.predict_one(x))
            .collect::<Result<Vec<_>>>()?;
        majority(&predictions)
    }

    /// Every member learns the sample.
    fn learn_one(&mut self, x: &[f64], y: ClassId) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        for m in &mut self.members {
            m.learn_one(x, y)?;
        }
        Ok(())
    }

    fn clone_model(&self) -> Box<dyn Model> {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|m| m.name()).collect();
        ensemble_name(names.iter().map(String::as_str))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vote_rules() {
        assert_eq!(majority(&[1, 1, 0]).unwrap(), 1);
        assert_eq!(majority(&[0, 1]).unwrap(), 0);
        assert_eq!(majority(&[2]).unwrap(), 2);
        assert!(matches!(majority(&[]), Err(Error::EmptyEnsemble)));
    }
}
