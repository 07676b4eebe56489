//! Softmax regression over pooled image statistics.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::balanced_batches;
use crate::imgproc::ImagePlane;
use crate::optim::adam::{AdamConfig, AdamState, ParamVector};
use crate::optim::features::{pooled_image_features, IMAGE_FEATURES};
use crate::optim::loss::{scce_loss, softmax};
use crate::optim::segmenter::INIT_SCALE;
use crate::rng::{rng_for, streams};

const MIN_SCALE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: ImagePlane,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// Per-class rows `[w_0 .. w_{F-1}, b]` over standardized pooled features.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageClassifierModel {
    pub classes: usize,
    pub params: ParamVector,
    pub scaler_mean: [f64; IMAGE_FEATURES],
    pub scaler_std: [f64; IMAGE_FEATURES],
}

impl ImageClassifierModel {
    pub fn new(
        classes: usize,
        params: ParamVector,
        scaler_mean: [f64; IMAGE_FEATURES],
        scaler_std: [f64; IMAGE_FEATURES],
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 classes, got {classes}")));
        }
        let expected = classes * (IMAGE_FEATURES + 1);
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: params.len(),
            });
        }
        if scaler_mean.iter().chain(&scaler_std).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature scaler".into()));
        }
        Ok(Self {
            classes,
            params,
            scaler_mean,
            scaler_std,
        })
    }

    fn standardize(&self, raw: [f64; IMAGE_FEATURES]) -> [f64; IMAGE_FEATURES] {
        standardize(raw, &self.scaler_mean, &self.scaler_std)
    }

    pub fn probabilities(&self, img: &ImagePlane) -> Vec<f64> {
        let x = self.standardize(pooled_image_features(img));
        softmax(&logits(self.params.as_slice(), self.classes, &x))
    }
}

fn standardize(
    raw: [f64; IMAGE_FEATURES],
    mean: &[f64; IMAGE_FEATURES],
    std: &[f64; IMAGE_FEATURES],
) -> [f64; IMAGE_FEATURES] {
    let mut out = [0.0; IMAGE_FEATURES];
    for j in 0..IMAGE_FEATURES {
        out[j] = if std[j] < MIN_SCALE { 0.0 } else { (raw[j] - mean[j]) / std[j] };
    }
    out
}

fn logits(params: &[f64], classes: usize, x: &[f64; IMAGE_FEATURES]) -> Vec<f64> {
    (0..classes)
        .map(|c| {
            let row = &params[c * (IMAGE_FEATURES + 1)..(c + 1) * (IMAGE_FEATURES + 1)];
            row[..IMAGE_FEATURES]
                .iter()
                .zip(x)
                .fold(row[IMAGE_FEATURES], |acc, (w, v)| acc + w * v)
        })
        .collect()
}

/// Most probable class (lowest index on ties) and the class probabilities.
pub fn predict_label(model: &ImageClassifierModel, img: &ImagePlane) -> (usize, Vec<f64>) {
    let probs = model.probabilities(img);
    let label = probs
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if *p > probs[best] { i } else { best });
    (label, probs)
}

#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: ImageClassifierModel,
    /// Mean cross-entropy per epoch.
    pub history: Vec<f64>,
}

/// Trains with cross-entropy on class-balanced batches. Labels must be
/// `0..classes` with at least two distinct labels present.
pub fn train_image_classifier(train: &[LabeledImage], cfg: &ClassifierTrainConfig) -> Result<TrainedClassifier> {
    if train.is_empty() {
        return Err(Error::Empty("no training images".into()));
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be positive".into()));
    }
    cfg.adam.validate()?;
    let labels: Vec<usize> = train.iter().map(|s| s.label).collect();
    let classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let mut present = vec![false; classes];
    labels.iter().for_each(|&l| present[l] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Degenerate("training set holds a single class".into()));
    }
    if present.iter().any(|p| !p) {
        return Err(Error::InvalidParameter("class labels must be contiguous from 0".into()));
    }

    let raw: Vec<[f64; IMAGE_FEATURES]> = train.iter().map(|s| pooled_image_features(&s.image)).collect();
    let n = raw.len() as f64;
    let mut mean = [0.0; IMAGE_FEATURES];
    let mut std = [0.0; IMAGE_FEATURES];
    for j in 0..IMAGE_FEATURES {
        mean[j] = raw.iter().map(|r| r[j]).sum::<f64>() / n;
        std[j] = (raw.iter().map(|r| (r[j] - mean[j]) * (r[j] - mean[j])).sum::<f64>() / n).sqrt();
        if std[j] < MIN_SCALE {
            std[j] = 0.0;
        }
    }
    let xs: Vec<[f64; IMAGE_FEATURES]> = raw.into_iter().map(|r| standardize(r, &mean, &std)).collect();

    let width = IMAGE_FEATURES + 1;
    let mut init = rng_for(cfg.seed, streams::INIT, 0);
    let normal = Normal::new(0.0, INIT_SCALE).expect("valid normal");
    let mut params: Vec<f64> = (0..classes * width)
        .map(|i| if i % width == IMAGE_FEATURES { 0.0 } else { normal.sample(&mut init) })
        .collect();
    let mut adam = AdamState::new(params.len(), cfg.adam)?;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let epoch_seed = crate::rng::derive_seed(cfg.seed, streams::BATCHES, epoch as u64);
        let batches = balanced_batches(&labels, cfg.batch_size, epoch_seed)?;
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in &batches {
            let mut grad = vec![0.0; params.len()];
            for &i in batch {
                let lv = scce_loss(&logits(&params, classes, &xs[i]), labels[i])?;
                loss_sum += lv.loss;
                for (c, dz) in lv.grad.iter().enumerate() {
                    let row = &mut grad[c * width..(c + 1) * width];
                    for (g, v) in row[..IMAGE_FEATURES].iter_mut().zip(&xs[i]) {
                        *g += dz * v;
                    }
                    row[IMAGE_FEATURES] += dz;
                }
            }
            seen += batch.len();
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut params, &grad)?;
        }
        let mean_loss = loss_sum / seen as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Training(format!("non-finite loss at epoch {epoch}")));
        }
        history.push(mean_loss);
    }

    Ok(TrainedClassifier {
        model: ImageClassifierModel::new(classes, ParamVector::new(params)?, mean, std)?,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(level: f64, k: usize) -> ImagePlane {
        ImagePlane::from_fn(8, 8, |r, c| level + ((r * 3 + c + k) % 5) as f64 * 0.02).unwrap()
    }

    fn two_blobs() -> Vec<LabeledImage> {
        (0..12)
            .map(|k| LabeledImage {
                image: blob(if k % 3 == 0 { 0.7 } else { 0.2 }, k),
                label: (k % 3 == 0) as usize,
            })
            .collect()
    }

    fn cfg() -> ClassifierTrainConfig {
        ClassifierTrainConfig {
            epochs: 60,
            batch_size: 4,
            adam: AdamConfig::with_lr(0.05),
            seed: 3,
        }
    }

    #[test]
    fn separable_blobs() {
        let set = two_blobs();
        let trained = train_image_classifier(&set, &cfg()).unwrap();
        for s in &set {
            let (label, probs) = predict_label(&trained.model, &s.image);
            assert_eq!(label, s.label);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let again = train_image_classifier(&set, &cfg()).unwrap();
        assert_eq!(trained.model, again.model);
    }

    #[test]
    fn rejects_single_class() {
        let set: Vec<_> = two_blobs().into_iter().filter(|s| s.label == 0).collect();
        assert!(matches!(train_image_classifier(&set, &cfg()), Err(Error::Degenerate(_))));
    }
}
