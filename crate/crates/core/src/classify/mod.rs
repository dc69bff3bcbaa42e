//! Per-plane classifier contract and the reference softmax-regression model.

mod features;
mod softmax;

pub use features::featurize;
pub use softmax::{train, train_logged, Gradient, SoftmaxModel, TrainConfig, MODEL_MAGIC, MODEL_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class posterior: non-negative, sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidParam("score vector has no classes".into()));
        }
        let sum: f64 = scores.iter().sum();
        if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0))
            || (sum - 1.0).abs() > Self::SUM_TOLERANCE
        {
            return Err(Error::InvalidParam(format!(
                "not a posterior (sum {sum}): {scores:?}"
            )));
        }
        Ok(ScoreVector(scores))
    }

    pub fn uniform(classes: usize) -> Self {
        ScoreVector(vec![1.0 / classes as f64; classes])
    }

    pub fn class_count(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.0.iter().enumerate() {
            if s > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub(crate) fn from_raw(scores: Vec<f64>) -> Self {
        ScoreVector(scores)
    }
}

/// A trained per-plane model. Labels are 0-based class indices.
pub trait Classifier: Send + Sync {
    fn class_count(&self) -> usize;
    fn feature_dim(&self) -> usize;
    fn predict(&self, features: &[f64]) -> Result<ScoreVector>;
}
