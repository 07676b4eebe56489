//! Differentiable losses with analytic gradients.
//!
//! Reductions run left to right over the input so results are bit-stable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss value and its gradient with respect to the inputs (probabilities for
/// the overlap losses, logits for cross-entropy).
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Dice,
    Jaccard,
    /// Pixel-wise binary cross-entropy, kept for comparison only.
    Bce,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Dice => "dice",
            LossKind::Jaccard => "jaccard",
            LossKind::Bce => "bce",
        }
    }

    pub fn evaluate(&self, pred: &[f64], target: &[bool], eps: f64) -> Result<LossValue> {
        match self {
            LossKind::Dice => soft_dice_loss(pred, target, eps),
            LossKind::Jaccard => soft_jaccard_loss(pred, target, eps),
            LossKind::Bce => bce_loss(pred, target),
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dice" => Ok(LossKind::Dice),
            "jaccard" => Ok(LossKind::Jaccard),
            "bce" => Ok(LossKind::Bce),
            _ => Err(Error::InvalidParameter(format!("unknown loss {s:?}"))),
        }
    }
}

pub const DEFAULT_SMOOTHING: f64 = 1.0;

fn check_pair(pred: &[f64], target: &[bool], eps: f64) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            actual: pred.len(),
        });
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing must be positive, got {eps}"
        )));
    }
    Ok(())
}

/// `(sum p*g, sum p, sum g)`
fn overlap_sums(pred: &[f64], target: &[bool]) -> (f64, f64, f64) {
    let mut inter = 0.0;
    let mut sp = 0.0;
    let mut sg = 0.0;
    for (&p, &g) in pred.iter().zip(target) {
        sp += p;
        if g {
            inter += p;
            sg += 1.0;
        }
    }
    (inter, sp, sg)
}

/// `1 - (2 sum(pg) + eps) / (sum(p) + sum(g) + eps)`
pub fn soft_dice_loss(pred: &[f64], target: &[bool], eps: f64) -> Result<LossValue> {
    check_pair(pred, target, eps)?;
    let (inter, sp, sg) = overlap_sums(pred, target);
    let num = 2.0 * inter + eps;
    let den = sp + sg + eps;
    let den2 = den * den;
    let grad = target
        .iter()
        .map(|&g| -((if g { 2.0 } else { 0.0 }) * den - num) / den2)
        .collect();
    Ok(LossValue {
        loss: 1.0 - num / den,
        grad,
    })
}

/// `1 - (sum(pg) + eps) / (sum(p) + sum(g) - sum(pg) + eps)`
pub fn soft_jaccard_loss(pred: &[f64], target: &[bool], eps: f64) -> Result<LossValue> {
    check_pair(pred, target, eps)?;
    let (inter, sp, sg) = overlap_sums(pred, target);
    let num = inter + eps;
    let den = sp + sg - inter + eps;
    let den2 = den * den;
    // d(union)/dp is 0 on lesion pixels and 1 elsewhere
    let grad = target
        .iter()
        .map(|&g| if g { -den / den2 } else { num / den2 })
        .collect();
    Ok(LossValue {
        loss: 1.0 - num / den,
        grad,
    })
}

const BCE_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy over pixels.
pub fn bce_loss(pred: &[f64], target: &[bool]) -> Result<LossValue> {
    check_pair(pred, target, 1.0)?;
    if pred.is_empty() {
        return Err(Error::Empty("no pixels".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &g) in pred.iter().zip(target) {
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        if g {
            loss -= p.ln();
            grad.push(-1.0 / (p * n));
        } else {
            loss -= (1.0 - p).ln();
            grad.push(1.0 / ((1.0 - p) * n));
        }
    }
    Ok(LossValue {
        loss: loss / n,
        grad,
    })
}

/// Softmax followed by the negative log-likelihood of `label`; the gradient
/// with respect to the logits is `softmax - onehot(label)`.
pub fn scce_loss(logits: &[f64], label: usize) -> Result<LossValue> {
    if label >= logits.len() {
        return Err(Error::InvalidParameter(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    let (top, &max) = logits
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, (i, z)| if *z > *best.1 { (i, z) } else { best });
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    // the arg-max term contributes exactly 1; summing the rest separately
    // keeps ln(1 + tiny) accurate
    let rest: f64 = exps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, e)| e)
        .sum();
    let total = 1.0 + rest;
    let loss = (max - logits[label]) + rest.ln_1p();
    let grad = exps
        .iter()
        .enumerate()
        .map(|(i, e)| e / total - if i == label { 1.0 } else { 0.0 })
        .collect();
    Ok(LossValue { loss, grad })
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
