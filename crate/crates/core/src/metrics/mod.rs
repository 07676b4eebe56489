//! Classification and segmentation scores and their fold aggregation.

mod mask;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mask::BinaryMask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// A metric value plus a flag telling whether its denominator was zero, in
/// which case the value is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub degenerate: bool,
}

impl Ratio {
    fn of(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Ratio {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Ratio {
                value: num / den,
                degenerate: false,
            }
        }
    }
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> Ratio {
        Ratio::of(self.tp as f64, (self.fp + self.tp) as f64)
    }

    pub fn recall(&self) -> Ratio {
        Ratio::of(self.tp as f64, (self.fn_ + self.tp) as f64)
    }

    pub fn f1(&self) -> Ratio {
        Ratio::of(
            (self.tp * 2) as f64,
            (self.fp + 2 * self.tp + self.fn_) as f64,
        )
    }

    pub fn accuracy(&self) -> Ratio {
        Ratio::of((self.tn + self.tp) as f64, self.total() as f64)
    }
}

pub fn confusion_counts<L: PartialEq>(pred: &[L], truth: &[L], positive: &L) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("no labels to compare".into()));
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn precision(c: &ConfusionCounts) -> Ratio {
    c.precision()
}

pub fn recall(c: &ConfusionCounts) -> Ratio {
    c.recall()
}

pub fn f1(c: &ConfusionCounts) -> Ratio {
    c.f1()
}

pub fn accuracy(c: &ConfusionCounts) -> Ratio {
    c.accuracy()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub accuracy: Ratio,
    pub precision: Ratio,
    pub recall: Ratio,
    pub f1: Ratio,
}

/// Scores over class indices `0..classes`.
///
/// With two classes, precision/recall/F1 are those of class 1. With more,
/// each class is scored one-vs-rest and the three are macro-averaged; a
/// macro value is flagged degenerate if any class was.
pub fn classification_scores(pred: &[usize], truth: &[usize], classes: usize) -> Result<ClassificationScores> {
    if classes < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two classes, got {classes}"
        )));
    }
    if let Some(&bad) = pred.iter().chain(truth).find(|&&l| l >= classes) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside 0..{classes}"
        )));
    }
    if classes == 2 {
        let c = confusion_counts(pred, truth, &1)?;
        return Ok(ClassificationScores {
            accuracy: c.accuracy(),
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        });
    }

    let mut per_class = Vec::with_capacity(classes);
    for class in 0..classes {
        per_class.push(confusion_counts(pred, truth, &class)?);
    }
    let macro_avg = |f: fn(&ConfusionCounts) -> Ratio| {
        let ratios: Vec<Ratio> = per_class.iter().map(f).collect();
        Ratio {
            value: ratios.iter().map(|r| r.value).sum::<f64>() / classes as f64,
            degenerate: ratios.iter().any(|r| r.degenerate),
        }
    };
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(ClassificationScores {
        accuracy: Ratio::of(correct as f64, pred.len() as f64),
        precision: macro_avg(ConfusionCounts::precision),
        recall: macro_avg(ConfusionCounts::recall),
        f1: macro_avg(ConfusionCounts::f1),
    })
}

fn check_same_dims(pred: &BinaryMask, gt: &BinaryMask) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {:?}, ground truth is {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    Ok(())
}

/// `(|X ∩ Y|, |X|, |Y|)`
fn overlap(pred: &BinaryMask, gt: &BinaryMask) -> (usize, usize, usize) {
    let mut inter = 0;
    let mut np = 0;
    let mut ng = 0;
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        inter += (p && g) as usize;
        np += p as usize;
        ng += g as usize;
    }
    (inter, np, ng)
}

/// `2|X ∩ Y| / (|X| + |Y|)`; two empty masks score 1.
pub fn dice_score(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_same_dims(pred, gt)?;
    let (inter, np, ng) = overlap(pred, gt);
    if np + ng == 0 {
        return Ok(1.0);
    }
    Ok((2 * inter) as f64 / (np + ng) as f64)
}

/// `|X ∩ Y| / |X ∪ Y|`; two empty masks score 1.
pub fn iou_score(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_same_dims(pred, gt)?;
    let (inter, np, ng) = overlap(pred, gt);
    let union = np + ng - inter;
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Fraction of pixels whose labels agree.
pub fn pixel_accuracy(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    check_same_dims(pred, gt)?;
    let agree = pred
        .data()
        .iter()
        .zip(gt.data())
        .filter(|(p, g)| p == g)
        .count();
    Ok(agree as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub std: f64,
}

pub fn aggregate_folds(values: &[f64]) -> Result<MeanStd> {
    if values.is_empty() {
        return Err(Error::Empty("no fold values to aggregate".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(MeanStd {
        mean,
        std: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Accuracy,
    Precision,
    Recall,
    F1,
    PixelAccuracy,
    Dice,
    Iou,
}

impl MetricName {
    pub const ALL: [MetricName; 7] = [
        MetricName::Accuracy,
        MetricName::Precision,
        MetricName::Recall,
        MetricName::F1,
        MetricName::PixelAccuracy,
        MetricName::Dice,
        MetricName::Iou,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::Accuracy => "accuracy",
            MetricName::Precision => "precision",
            MetricName::Recall => "recall",
            MetricName::F1 => "f1",
            MetricName::PixelAccuracy => "pixel_accuracy",
            MetricName::Dice => "dice",
            MetricName::Iou => "iou",
        }
    }
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s:?}")))
    }
}

/// One fold's scores. Fold numbers are 1-based in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub metrics: BTreeMap<MetricName, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate: Vec<MetricName>,
}

impl FoldSummary {
    pub fn new(fold: usize) -> Self {
        Self {
            fold,
            metrics: BTreeMap::new(),
            degenerate: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: MetricName, value: f64) -> Result<()> {
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(Error::InvalidParameter(format!(
                "{name} = {value} is outside [0, 1]"
            )));
        }
        self.metrics.insert(name, value);
        Ok(())
    }

    pub fn insert_ratio(&mut self, name: MetricName, ratio: Ratio) -> Result<()> {
        if ratio.degenerate {
            self.degenerate.push(name);
        }
        self.insert(name, ratio.value)
    }

    pub fn get(&self, name: MetricName) -> Option<f64> {
        self.metrics.get(&name).copied()
    }
}

/// Mean and spread per metric over the given folds. Every fold must carry
/// the same metric set.
pub fn aggregate_summaries(folds: &[FoldSummary]) -> Result<BTreeMap<MetricName, MeanStd>> {
    let first = folds
        .first()
        .ok_or_else(|| Error::Empty("no folds to aggregate".into()))?;
    let mut out = BTreeMap::new();
    for &name in first.metrics.keys() {
        let values = folds
            .iter()
            .map(|f| {
                f.get(name).ok_or_else(|| {
                    Error::InvalidParameter(format!("fold {} lacks metric {name}", f.fold))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.insert(name, aggregate_folds(&values)?);
    }
    Ok(out)
}
