use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, ScoreVector};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"HDMMSMAX";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// The learning rate is multiplied by `lr_decay` every `lr_step` epochs.
    pub lr_step: usize,
    pub lr_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            momentum: 0.9,
            weight_decay: 5e-4,
            batch_size: 256,
            epochs: 100,
            lr_step: 20,
            lr_decay: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.batch_size >= 1
            && self.lr_step >= 1
            && self.lr_decay > 0.0
            && (0.0..1.0).contains(&self.momentum)
            && self.weight_decay >= 0.0;
        if !ok {
            return Err(Error::InvalidParam(format!("train config {self:?}")));
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi((epoch / self.lr_step) as i32)
    }
}

/// Multinomial logistic regression: `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    classes: usize,
    dim: usize,
    /// Row-major `classes × dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    final_loss: f64,
}

/// Gradient of the regularized loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxModel {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        SoftmaxModel {
            classes,
            dim,
            weights: vec![0.0; classes * dim],
            bias: vec![0.0; classes],
            final_loss: f64::NAN,
        }
    }

    pub fn from_parts(classes: usize, dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != classes * dim || bias.len() != classes || classes == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{classes}x{dim} model given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(SoftmaxModel {
            classes,
            dim,
            weights,
            bias,
            final_loss: f64::NAN,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Regularized training loss after the last epoch (NaN if never trained).
    pub fn final_loss(&self) -> f64 {
        self.final_loss
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b)
            .collect()
    }

    /// Mean cross-entropy over `examples` plus `weight_decay / 2 · ‖W‖²`.
    pub fn loss(&self, examples: &[(&[f64], usize)], weight_decay: f64) -> f64 {
        let ce: f64 = examples
            .iter()
            .map(|(x, y)| {
                let z = self.logits(x);
                log_sum_exp(&z) - z[*y]
            })
            .sum::<f64>()
            / examples.len() as f64;
        ce + 0.5 * weight_decay * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of [`SoftmaxModel::loss`]. Biases are not decayed.
    pub fn gradient(&self, examples: &[(&[f64], usize)], weight_decay: f64) -> Gradient {
        let mut g = Gradient {
            weights: self.weights.iter().map(|w| weight_decay * w).collect(),
            bias: vec![0.0; self.classes],
        };
        let scale = 1.0 / examples.len() as f64;
        for (x, y) in examples {
            let p = softmax(&self.logits(x));
            for (k, pk) in p.into_iter().enumerate() {
                let err = scale * (pk - if k == *y { 1.0 } else { 0.0 });
                g.bias[k] += err;
                let row = &mut g.weights[k * self.dim..(k + 1) * self.dim];
                for (gw, xi) in row.iter_mut().zip(x.iter()) {
                    *gw += err * xi;
                }
            }
        }
        g
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + 8 * (self.weights.len() + self.bias.len()));
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.classes as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in std::iter::once(&self.final_loss)
            .chain(&self.weights)
            .chain(&self.bias)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::ModelFormat(m);
        if bytes.len() < 20 || &bytes[..8] != MODEL_MAGIC {
            return Err(bad("missing magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(8);
        if version != MODEL_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let (classes, dim) = (word(12) as usize, word(16) as usize);
        let count = 1 + classes * dim + classes;
        if bytes.len() != 20 + 8 * count {
            return Err(bad(format!(
                "{classes}x{dim} model needs {} bytes, got {}",
                20 + 8 * count,
                bytes.len()
            )));
        }
        let vals: Vec<f64> = bytes[20..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mut model = SoftmaxModel::from_parts(
            classes,
            dim,
            vals[1..1 + classes * dim].to_vec(),
            vals[1 + classes * dim..].to_vec(),
        )?;
        model.final_loss = vals[0];
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

impl Classifier for SoftmaxModel {
    fn class_count(&self) -> usize {
        self.classes
    }

    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, features: &[f64]) -> Result<ScoreVector> {
        if features.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} features, got {}",
                self.dim,
                features.len()
            )));
        }
        Ok(ScoreVector::from_raw(softmax(&self.logits(features))))
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn train(examples: &[(Vec<f64>, usize)], classes: usize, cfg: &TrainConfig) -> Result<SoftmaxModel> {
    train_logged(examples, classes, cfg, |_, _| {})
}

/// Mini-batch SGD with momentum and L2 weight decay from a zero start,
/// `on_epoch(epoch, loss)` called after every epoch with the full-set loss.
/// Deterministic for a given seed and example order.
pub fn train_logged(
    examples: &[(Vec<f64>, usize)],
    classes: usize,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<SoftmaxModel> {
    cfg.validate()?;
    let dim = examples
        .first()
        .map(|(x, _)| x.len())
        .ok_or(Error::MissingClass(0))?;
    let mut seen = vec![false; classes];
    for (x, y) in examples {
        if x.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "feature length {} differs from {dim}",
                x.len()
            )));
        }
        *seen.get_mut(*y).ok_or(Error::LabelOutOfRange {
            label: *y,
            classes,
        })? = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::MissingClass(missing));
    }

    let all: Vec<(&[f64], usize)> = examples.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
    let mut model = SoftmaxModel::zeros(classes, dim);
    let mut vw = vec![0.0; classes * dim];
    let mut vb = vec![0.0; classes];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..all.len()).collect();
    let mut loss = model.loss(&all, cfg.weight_decay);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| all[i]).collect();
            let g = model.gradient(&batch, cfg.weight_decay);
            for ((w, v), gw) in model.weights.iter_mut().zip(&mut vw).zip(&g.weights) {
                *v = cfg.momentum * *v - lr * gw;
                *w += *v;
            }
            for ((b, v), gb) in model.bias.iter_mut().zip(&mut vb).zip(&g.bias) {
                *v = cfg.momentum * *v - lr * gb;
                *b += *v;
            }
        }
        loss = model.loss(&all, cfg.weight_decay);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                loss,
            });
        }
        on_epoch(epoch + 1, loss);
    }
    model.final_loss = loss;
    Ok(model)
}
