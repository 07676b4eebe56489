//! Logistic per-pixel segmenter trained with an overlap loss.

use rand_distr::{Distribution, Normal};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::ImagePlane;
use crate::metrics::{dice_score, BinaryMask};
use crate::optim::adam::{AdamConfig, AdamState, ParamVector};
use crate::optim::features::{extract_pixel_features, PixelFeatureConfig, PIXEL_FEATURES};
use crate::optim::loss::{sigmoid, LossKind, DEFAULT_SMOOTHING};
use crate::rng::{rng_for, streams};

pub const INIT_SCALE: f64 = 0.01;

/// An image together with its ground-truth mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedImage {
    pub image: ImagePlane,
    pub mask: BinaryMask,
}

impl MaskedImage {
    pub fn new(image: ImagePlane, mask: BinaryMask) -> Result<Self> {
        if image.dims() != mask.dims() {
            return Err(Error::DimensionMismatch(format!(
                "image is {:?} but mask is {:?}",
                image.dims(),
                mask.dims()
            )));
        }
        Ok(Self { image, mask })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmenterTrainConfig {
    pub loss: LossKind,
    pub epochs: usize,
    /// Images per optimizer step.
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub smoothing: f64,
    pub threshold: f64,
    pub features: PixelFeatureConfig,
    pub seed: u64,
}

impl Default for SegmenterTrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Dice,
            epochs: 200,
            batch_size: 32,
            adam: AdamConfig::default(),
            smoothing: DEFAULT_SMOOTHING,
            threshold: 0.5,
            features: PixelFeatureConfig::default(),
            seed: 0,
        }
    }
}

/// `p = sigmoid(w . features + b)` for every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSegmenterModel {
    /// Feature weights followed by the bias.
    pub params: ParamVector,
    pub features: PixelFeatureConfig,
    pub threshold: f64,
}

impl PixelSegmenterModel {
    pub fn new(params: ParamVector, features: PixelFeatureConfig, threshold: f64) -> Result<Self> {
        if params.len() != PIXEL_FEATURES + 1 {
            return Err(Error::LengthMismatch {
                expected: PIXEL_FEATURES + 1,
                actual: params.len(),
            });
        }
        Ok(Self {
            params,
            features,
            threshold,
        })
    }

    pub fn probabilities(&self, img: &ImagePlane) -> Vec<f64> {
        let feats = extract_pixel_features(img, &self.features);
        let mut out = Vec::with_capacity(feats.len());
        forward(self.params.as_slice(), &feats, &mut out);
        out
    }

    /// Mask at the model's own threshold.
    pub fn predict(&self, img: &ImagePlane) -> BinaryMask {
        predict_mask(self, img, self.threshold)
    }
}

fn forward(params: &[f64], feats: &[[f64; PIXEL_FEATURES]], out: &mut Vec<f64>) {
    let (w, b) = params.split_at(PIXEL_FEATURES);
    let b = b[0];
    out.clear();
    out.extend(feats.iter().map(|f| {
        let z = b + w[0] * f[0] + w[1] * f[1] + w[2] * f[2] + w[3] * f[3];
        sigmoid(z)
    }));
}

/// Foreground wherever the predicted probability reaches `threshold`.
pub fn predict_mask(model: &PixelSegmenterModel, img: &ImagePlane, threshold: f64) -> BinaryMask {
    let probs = model.probabilities(img);
    let data = probs.iter().map(|&p| p >= threshold).collect();
    BinaryMask::from_raw(img.width(), img.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-image training loss over the epoch.
    pub train_loss: f64,
    /// Mean validation Dice after the epoch, when a validation set was given.
    pub val_dice: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedSegmenter {
    /// Parameters of the best epoch.
    pub model: PixelSegmenterModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

struct Prepared {
    feats: Vec<[f64; PIXEL_FEATURES]>,
    mask: Vec<bool>,
    dims: (usize, usize),
}

fn prepare(set: &[MaskedImage], cfg: &PixelFeatureConfig) -> Vec<Prepared> {
    set.iter()
        .map(|s| Prepared {
            feats: extract_pixel_features(&s.image, cfg),
            mask: s.mask.data().to_vec(),
            dims: s.mask.dims(),
        })
        .collect()
}

fn mean_dice(params: &[f64], set: &[Prepared], threshold: f64, buf: &mut Vec<f64>) -> Result<f64> {
    let mut total = 0.0;
    for s in set {
        forward(params, &s.feats, buf);
        let pred = BinaryMask::from_raw(s.dims.0, s.dims.1, buf.iter().map(|&p| p >= threshold).collect());
        let gt = BinaryMask::from_raw(s.dims.0, s.dims.1, s.mask.clone());
        total += dice_score(&pred, &gt)?;
    }
    Ok(total / set.len() as f64)
}

/// Mini-batch Adam over images. After every epoch the validation Dice is
/// measured and the best parameters kept (ties go to the earliest epoch);
/// without a validation set the final parameters are kept.
pub fn train_pixel_segmenter(
    train: &[MaskedImage],
    val: &[MaskedImage],
    cfg: &SegmenterTrainConfig,
) -> Result<TrainedSegmenter> {
    if train.is_empty() {
        return Err(Error::Empty("no training images".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidParameter("epochs and batch size must be positive".into()));
    }
    cfg.adam.validate()?;

    let train_set = prepare(train, &cfg.features);
    let val_set = prepare(val, &cfg.features);

    let mut init = rng_for(cfg.seed, streams::INIT, 0);
    let normal = Normal::new(0.0, INIT_SCALE).expect("valid normal");
    let mut params: Vec<f64> = (0..PIXEL_FEATURES).map(|_| normal.sample(&mut init)).collect();
    params.push(0.0);

    let mut adam = AdamState::new(params.len(), cfg.adam)?;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut probs = Vec::new();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_for(cfg.seed, streams::BATCHES, epoch as u64));
        let mut loss_sum = 0.0;

        for batch in order.chunks(cfg.batch_size) {
            let mut grad = [0.0; PIXEL_FEATURES + 1];
            for &i in batch {
                let s = &train_set[i];
                forward(&params, &s.feats, &mut probs);
                let lv = cfg.loss.evaluate(&probs, &s.mask, cfg.smoothing)?;
                if !lv.loss.is_finite() {
                    return Err(Error::Training(format!("non-finite loss at epoch {epoch}")));
                }
                loss_sum += lv.loss;
                for ((f, &p), &dp) in s.feats.iter().zip(&probs).zip(&lv.grad) {
                    let dz = dp * p * (1.0 - p);
                    grad[0] += dz * f[0];
                    grad[1] += dz * f[1];
                    grad[2] += dz * f[2];
                    grad[3] += dz * f[3];
                    grad[4] += dz;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut params, &grad)?;
        }

        let val_dice = if val_set.is_empty() {
            None
        } else {
            Some(mean_dice(&params, &val_set, cfg.threshold, &mut probs)?)
        };
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_dice,
        });
        match (val_dice, &best) {
            (Some(d), Some((best_d, _, _))) if d <= *best_d => {}
            (Some(d), _) => best = Some((d, epoch, params.clone())),
            (None, _) => best = Some((f64::NAN, epoch, params.clone())),
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(TrainedSegmenter {
        model: PixelSegmenterModel::new(ParamVector::new(best_params)?, cfg.features, cfg.threshold)?,
        history,
        best_epoch,
    })
}
