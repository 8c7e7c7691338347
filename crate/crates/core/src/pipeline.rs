//! Pipelines: zero or more transformers followed by one classifier.

use crate::error::{Error, Result};
use crate::learners::Classifier;
use crate::preprocess::Transformer;
use crate::stream::ClassId;

/// Anything the online loop can predict with and train.
///
/// Errors are reported per call so that a broken candidate can be
/// contained by the search instead of aborting the run.
pub trait Model: Send {
    fn predict_one(&self, x: &[f64]) -> Result<ClassId>;
    fn learn_one(&mut self, x: &[f64], y: ClassId) -> Result<()>;
    fn clone_model(&self) -> Box<dyn Model>;
    /// Short label for traces, usually the classifier name.
    fn name(&self) -> String;
}

impl Clone for Box<dyn Model> {
    fn clone(&self) -> Self {
        self.clone_model()
    }
}

#[derive(Clone)]
pub struct Pipeline {
    steps: Vec<Box<dyn Transformer>>,
    classifier: Box<dyn Classifier>,
}

impl Pipeline {
    pub fn new(steps: Vec<Box<dyn Transformer>>, classifier: Box<dyn Classifier>) -> Self {
        Self { steps, classifier }
    }

    pub fn classifier(&self) -> &dyn Classifier {
        &*self.classifier
    }

    pub fn step_names(&self) -> Vec<&'static str> {
        self.steps.iter().map(|s| s.name()).collect()
    }

    fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut current = x.to_vec();
        for step in &self.steps {
            current = step.transform_one(&current)?;
        }
        Ok(current)
    }

    pub fn predict_proba_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.classifier.predict_proba_one(&self.transform(x)?))
    }
}

impl Model for Pipeline {
    fn predict_one(&self, x: &[f64]) -> Result<ClassId> {
        let z = self.transform(x)?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite transformed features".into()));
        }
        Ok(self.classifier.predict_one(&z))
    }

    fn learn_one(&mut self, x: &[f64], y: ClassId) -> Result<()> {
        if y >= self.classifier.n_classes() {
            return Err(Error::Model(format!(
                "label {y} outside {} classes",
                self.classifier.n_classes()
            )));
        }
        let mut current = x.to_vec();
        for step in &mut self.steps {
            step.learn_one(&current)?;
            current = step.transform_one(&current)?;
        }
        self.classifier.learn_one(&current, y);
        Ok(())
    }

    fn clone_model(&self) -> Box<dyn Model> {
        Box::new(self.clone())
    }

    fn name(&self) -> String {
        self.classifier.name().to_string()
    }
}
