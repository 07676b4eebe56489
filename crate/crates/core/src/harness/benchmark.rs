//! Cross-validated classification and segmentation benchmarks.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_pair, SampleImage, SamplePair};
use crate::error::{Error, Result};
use crate::harness::dataset::Dataset;
use crate::harness::folds::{stratified_kfold, FoldPlan};
use crate::harness::manifest::ClassLabel;
use crate::harness::report::{BenchmarkReport, FoldMeta, RunMetadata, ScoreTable};
use crate::imgproc::{preprocess, ImagePlane, PreprocessConfig};
use crate::metrics::{
    classification_scores, dice_score, iou_score, pixel_accuracy, BinaryMask, FoldSummary, MetricName,
};
use crate::optim::{
    predict_label, train_image_classifier, train_pixel_segmenter, AdamConfig, ClassifierTrainConfig,
    ImageClassifierModel, LabeledImage, LossKind, MaskedImage, Model, PixelFeatureConfig, PixelSegmenterModel,
    SegmenterTrainConfig, DEFAULT_SMOOTHING,
};
use crate::rng::{derive_seed, streams};

pub const THREADS_ENV: &str = "OTBENCH_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classify,
    Segment,
}

/// Which model each fold trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    /// Softmax regression on pooled statistics, or the logistic pixel model.
    Linear,
    /// Returns the ground truth. For smoke tests.
    Oracle,
    /// Predicts the most frequent training class, or an empty mask.
    Majority,
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelSpec::Linear),
            "oracle" => Ok(ModelSpec::Oracle),
            "majority" => Ok(ModelSpec::Majority),
            _ => Err(Error::InvalidParameter(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub task: Task,
    pub model: ModelSpec,
    /// Segmentation loss; classification always uses cross-entropy.
    pub loss: LossKind,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub folds: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Augment the training split of every fold.
    pub augment: bool,
    pub preprocess: PreprocessConfig,
    pub features: PixelFeatureConfig,
}

impl BenchmarkConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            model: ModelSpec::Linear,
            loss: LossKind::Dice,
            batch_size: 32,
            lr: 1e-4,
            epochs: 200,
            folds: 5,
            seed: 0,
            threshold: 0.5,
            augment: true,
            preprocess: PreprocessConfig::default(),
            features: PixelFeatureConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidParameter("batch size and epochs must be positive".into()));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        AdamConfig::with_lr(self.lr).validate()?;
        self.preprocess.validate()
    }
}

/// Execution settings that do not affect results.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Folds run concurrently on up to this many threads; `None` uses all
    /// available cores.
    pub threads: Option<usize>,
    pub record_timestamps: bool,
    /// Writes each fold's trained model here when set.
    pub model_dir: Option<PathBuf>,
}

impl RunOptions {
    /// Defaults with the thread cap read from `OTBENCH_THREADS`.
    pub fn from_env() -> Result<Self> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::InvalidParameter(format!("{THREADS_ENV}={v:?} is not a positive integer")))?,
            ),
            Err(_) => None,
        };
        Ok(Self {
            threads,
            ..Self::default()
        })
    }
}

/// What a trainer sees of its fold.
#[derive(Debug, Clone, Copy)]
pub struct FoldContext<'a> {
    /// 1-based.
    pub fold: usize,
    /// Seed of this fold's private stream.
    pub seed: u64,
    pub config: &'a BenchmarkConfig,
}

pub trait LabelPredictor: Send {
    fn predict(&self, sample: &LabeledImage) -> Result<usize>;

    fn model(&self) -> Option<Model> {
        None
    }
}

pub trait ClassifierTrainer: Sync {
    fn train(&self, train: &[LabeledImage], ctx: &FoldContext) -> Result<Box<dyn LabelPredictor>>;
}

pub trait MaskPredictor: Send {
    fn predict(&self, sample: &MaskedImage) -> Result<BinaryMask>;

    fn model(&self) -> Option<Model> {
        None
    }
}

pub struct TrainedMasker {
    pub predictor: Box<dyn MaskPredictor>,
    pub best_epoch: Option<usize>,
}

pub trait SegmenterTrainer: Sync {
    fn train(&self, train: &[MaskedImage], val: &[MaskedImage], ctx: &FoldContext) -> Result<TrainedMasker>;
}

pub struct LinearClassifier;
pub struct OracleClassifier;
pub struct MajorityClassifier;

impl LabelPredictor for ImageClassifierModel {
    fn predict(&self, sample: &LabeledImage) -> Result<usize> {
        Ok(predict_label(self, &sample.image).0)
    }

    fn model(&self) -> Option<Model> {
        Some(Model::ImageClassifier(self.clone()))
    }
}

impl ClassifierTrainer for LinearClassifier {
    fn train(&self, train: &[LabeledImage], ctx: &FoldContext) -> Result<Box<dyn LabelPredictor>> {
        let cfg = ClassifierTrainConfig {
            epochs: ctx.config.epochs,
            batch_size: ctx.config.batch_size,
            adam: AdamConfig::with_lr(ctx.config.lr),
            seed: ctx.seed,
        };
        Ok(Box::new(train_image_classifier(train, &cfg)?.model))
    }
}

struct GroundTruthLabel;

impl LabelPredictor for GroundTruthLabel {
    fn predict(&self, sample: &LabeledImage) -> Result<usize> {
        Ok(sample.label)
    }
}

impl ClassifierTrainer for OracleClassifier {
    fn train(&self, _: &[LabeledImage], _: &FoldContext) -> Result<Box<dyn LabelPredictor>> {
        Ok(Box::new(GroundTruthLabel))
    }
}

struct ConstantLabel(usize);

impl LabelPredictor for ConstantLabel {
    fn predict(&self, _: &LabeledImage) -> Result<usize> {
        Ok(self.0)
    }
}

impl ClassifierTrainer for MajorityClassifier {
    fn train(&self, train: &[LabeledImage], _: &FoldContext) -> Result<Box<dyn LabelPredictor>> {
        let classes = train.iter().map(|s| s.label).max().unwrap_or(0) + 1;
        let mut counts = vec![0usize; classes];
        train.iter().for_each(|s| counts[s.label] += 1);
        let best = (0..classes).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
        Ok(Box::new(ConstantLabel(best)))
    }
}

pub struct LinearSegmenter;
pub struct OracleSegmenter;
pub struct MajoritySegmenter;

impl MaskPredictor for PixelSegmenterModel {
    fn predict(&self, sample: &MaskedImage) -> Result<BinaryMask> {
        Ok(PixelSegmenterModel::predict(self, &sample.image))
    }

    fn model(&self) -> Option<Model> {
        Some(Model::PixelSegmenter(self.clone()))
    }
}

impl SegmenterTrainer for LinearSegmenter {
    fn train(&self, train: &[MaskedImage], val: &[MaskedImage], ctx: &FoldContext) -> Result<TrainedMasker> {
        let c = ctx.config;
        let cfg = SegmenterTrainConfig {
            loss: c.loss,
            epochs: c.epochs,
            batch_size: c.batch_size,
            adam: AdamConfig::with_lr(c.lr),
            smoothing: DEFAULT_SMOOTHING,
            threshold: c.threshold,
            features: c.features,
            seed: ctx.seed,
        };
        let trained = train_pixel_segmenter(train, val, &cfg)?;
        Ok(TrainedMasker {
            predictor: Box::new(trained.model),
            best_epoch: Some(trained.best_epoch),
        })
    }
}

struct GroundTruthMask;

impl MaskPredictor for GroundTruthMask {
    fn predict(&self, sample: &MaskedImage) -> Result<BinaryMask> {
        Ok(sample.mask.clone())
    }
}

impl SegmenterTrainer for OracleSegmenter {
    fn train(&self, _: &[MaskedImage], _: &[MaskedImage], _: &FoldContext) -> Result<TrainedMasker> {
        Ok(TrainedMasker {
            predictor: Box::new(GroundTruthMask),
            best_epoch: None,
        })
    }
}

struct EmptyMask;

impl MaskPredictor for EmptyMask {
    fn predict(&self, sample: &MaskedImage) -> Result<BinaryMask> {
        BinaryMask::empty(sample.mask.width(), sample.mask.height())
    }
}

impl SegmenterTrainer for MajoritySegmenter {
    fn train(&self, _: &[MaskedImage], _: &[MaskedImage], _: &FoldContext) -> Result<TrainedMasker> {
        Ok(TrainedMasker {
            predictor: Box::new(EmptyMask),
            best_epoch: None,
        })
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn pool(opts: &RunOptions) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("thread count must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Preprocessed image and mask of every sample, in dataset order.
fn preprocess_all(
    data: &Dataset,
    indices: &[usize],
    cfg: &PreprocessConfig,
) -> Result<Vec<(ImagePlane, Option<BinaryMask>)>> {
    indices
        .par_iter()
        .map(|&i| {
            let s = &data.samples[i];
            Ok((preprocess(&s.image, cfg)?, s.mask.clone()))
        })
        .collect()
}

/// The original pair followed by its augmented derivatives when enabled.
fn expand(
    plane: &ImagePlane,
    mask: Option<&BinaryMask>,
    augment: bool,
) -> Result<Vec<(ImagePlane, Option<BinaryMask>)>> {
    let mut out = vec![(plane.clone(), mask.cloned())];
    if augment {
        let pair = SamplePair::gray(plane.clone(), mask.cloned())?;
        for a in augment_pair(&pair)? {
            let (image, mask) = a.pair.into_parts();
            match image {
                SampleImage::Gray(p) => out.push((p, mask)),
                SampleImage::Rgb(_) => unreachable!("gray input stays gray"),
            }
        }
    }
    Ok(out)
}

struct FoldOutcome {
    summary: FoldSummary,
    meta: FoldMeta,
    model: Option<Model>,
}

fn run_folds(
    cfg: &BenchmarkConfig,
    plan: &FoldPlan,
    opts: &RunOptions,
    pool: &rayon::ThreadPool,
    run: impl Fn(usize, &[usize], &[usize], FoldContext) -> Result<FoldOutcome> + Sync,
) -> Result<Vec<FoldOutcome>> {
    let results: Vec<Result<FoldOutcome>> = pool.install(|| {
        (0..plan.k)
            .into_par_iter()
            .map(|f| {
                let ctx = FoldContext {
                    fold: f + 1,
                    seed: derive_seed(cfg.seed, streams::FOLD_RUN, f as u64),
                    config: cfg,
                };
                run(f, &plan.train_indices(f), &plan.validation_indices(f), ctx)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(results.len());
    for (f, r) in results.into_iter().enumerate() {
        let outcome = r.map_err(|e| Error::Fold {
            fold: f + 1,
            source: Box::new(e),
        })?;
        if let (Some(dir), Some(model)) = (&opts.model_dir, &outcome.model) {
            model.save(dir.join(format!("fold_{}.json", f + 1)))?;
        }
        out.push(outcome);
    }
    Ok(out)
}

fn assemble(
    cfg: &BenchmarkConfig,
    data: &Dataset,
    records: usize,
    outcomes: Vec<FoldOutcome>,
    started: Option<u64>,
    opts: &RunOptions,
) -> Result<BenchmarkReport> {
    let (summaries, metas): (Vec<_>, Vec<_>) = outcomes.into_iter().map(|o| (o.summary, o.meta)).unzip();
    Ok(BenchmarkReport {
        config: *cfg,
        scores: ScoreTable::from_folds(summaries)?,
        metadata: RunMetadata {
            seed: cfg.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: data.source.clone(),
            records,
            stages: cfg.preprocess.stages(),
            folds: metas,
            started_unix: started,
            finished_unix: opts.record_timestamps.then(unix_now),
        },
    })
}

/// Stratified k-fold classification with the configured model.
pub fn run_classification_benchmark(
    cfg: &BenchmarkConfig,
    data: &Dataset,
    opts: &RunOptions,
) -> Result<BenchmarkReport> {
    match cfg.model {
        ModelSpec::Linear => run_classification_with(cfg, data, &LinearClassifier, opts),
        ModelSpec::Oracle => run_classification_with(cfg, data, &OracleClassifier, opts),
        ModelSpec::Majority => run_classification_with(cfg, data, &MajorityClassifier, opts),
    }
}

/// Stratified k-fold classification with a caller-supplied trainer. Each
/// fold's training split is augmented; the validation split never is.
pub fn run_classification_with(
    cfg: &BenchmarkConfig,
    data: &Dataset,
    trainer: &dyn ClassifierTrainer,
    opts: &RunOptions,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let started = opts.record_timestamps.then(unix_now);
    let labels = data.labels();
    let plan = stratified_kfold(&labels, cfg.folds, cfg.seed)?;
    let pool = pool(opts)?;
    let all: Vec<usize> = (0..data.len()).collect();
    let planes = pool.install(|| preprocess_all(data, &all, &cfg.preprocess))?;

    let outcomes = run_folds(cfg, &plan, opts, &pool, |f, train_idx, val_idx, ctx| {
        let mut train = Vec::new();
        for &i in train_idx {
            for (image, _) in expand(&planes[i].0, None, cfg.augment)? {
                train.push(LabeledImage {
                    image,
                    label: labels[i],
                });
            }
        }
        let predictor = trainer.train(&train, &ctx)?;
        let mut pred = Vec::with_capacity(val_idx.len());
        let mut truth = Vec::with_capacity(val_idx.len());
        for &i in val_idx {
            let sample = LabeledImage {
                image: planes[i].0.clone(),
                label: labels[i],
            };
            pred.push(predictor.predict(&sample)?);
            truth.push(labels[i]);
        }
        let scores = classification_scores(&pred, &truth, 2)?;
        let mut summary = FoldSummary::new(f + 1);
        summary.insert_ratio(MetricName::Accuracy, scores.accuracy)?;
        summary.insert_ratio(MetricName::Precision, scores.precision)?;
        summary.insert_ratio(MetricName::Recall, scores.recall)?;
        summary.insert_ratio(MetricName::F1, scores.f1)?;
        Ok(FoldOutcome {
            summary,
            meta: FoldMeta {
                fold: f + 1,
                train_records: train_idx.len(),
                train_samples: train.len(),
                validation_records: val_idx.len(),
                validation_samples: pred.len(),
                best_epoch: None,
            },
            model: predictor.model(),
        })
    })?;
    assemble(cfg, data, data.len(), outcomes, started, opts)
}

/// k-fold segmentation over the diseased records with the configured model.
pub fn run_segmentation_benchmark(
    cfg: &BenchmarkConfig,
    data: &Dataset,
    opts: &RunOptions,
) -> Result<BenchmarkReport> {
    match cfg.model {
        ModelSpec::Linear => run_segmentation_with(cfg, data, &LinearSegmenter, opts),
        ModelSpec::Oracle => run_segmentation_with(cfg, data, &OracleSegmenter, opts),
        ModelSpec::Majority => run_segmentation_with(cfg, data, &MajoritySegmenter, opts),
    }
}

/// k-fold segmentation with a caller-supplied trainer. Healthy records are
/// skipped; every diseased record must carry a mask. Scores are per-image
/// means over the validation split.
pub fn run_segmentation_with(
    cfg: &BenchmarkConfig,
    data: &Dataset,
    trainer: &dyn SegmenterTrainer,
    opts: &RunOptions,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let started = opts.record_timestamps.then(unix_now);
    let selected: Vec<usize> = (0..data.len())
        .filter(|&i| data.samples[i].label == ClassLabel::Diseased)
        .collect();
    if selected.is_empty() {
        return Err(Error::Empty("no diseased records to segment".into()));
    }
    if let Some(&i) = selected.iter().find(|&&i| data.samples[i].mask.is_none()) {
        return Err(Error::Manifest(format!("{} has no mask", data.samples[i].id)));
    }
    let plan = stratified_kfold(&vec![0; selected.len()], cfg.folds, cfg.seed)?;
    let pool = pool(opts)?;
    let items: Vec<MaskedImage> = pool
        .install(|| preprocess_all(data, &selected, &cfg.preprocess))?
        .into_iter()
        .map(|(image, mask)| MaskedImage::new(image, mask.expect("checked above")))
        .collect::<Result<_>>()?;

    let outcomes = run_folds(cfg, &plan, opts, &pool, |f, train_idx, val_idx, ctx| {
        let mut train = Vec::new();
        for &i in train_idx {
            for (image, mask) in expand(&items[i].image, Some(&items[i].mask), cfg.augment)? {
                train.push(MaskedImage::new(image, mask.expect("mask carried through"))?);
            }
        }
        let val: Vec<MaskedImage> = val_idx.iter().map(|&i| items[i].clone()).collect();
        let trained = trainer.train(&train, &val, &ctx)?;
        let (mut dice, mut iou, mut acc) = (0.0, 0.0, 0.0);
        for s in &val {
            let pred = trained.predictor.predict(s)?;
            dice += dice_score(&pred, &s.mask)?;
            iou += iou_score(&pred, &s.mask)?;
            acc += pixel_accuracy(&pred, &s.mask)?;
        }
        let n = val.len() as f64;
        let mut summary = FoldSummary::new(f + 1);
        summary.insert(MetricName::PixelAccuracy, acc / n)?;
        summary.insert(MetricName::Dice, dice / n)?;
        summary.insert(MetricName::Iou, iou / n)?;
        Ok(FoldOutcome {
            summary,
            meta: FoldMeta {
                fold: f + 1,
                train_records: train_idx.len(),
                train_samples: train.len(),
                validation_records: val_idx.len(),
                validation_samples: val.len(),
                best_epoch: trained.best_epoch,
            },
            model: trained.predictor.model(),
        })
    })?;
    assemble(cfg, data, selected.len(), outcomes, started, opts)
}

pub fn run_benchmark(cfg: &BenchmarkConfig, data: &Dataset, opts: &RunOptions) -> Result<BenchmarkReport> {
    match cfg.task {
        Task::Classify => run_classification_benchmark(cfg, data, opts),
        Task::Segment => run_segmentation_benchmark(cfg, data, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{synth_disks, SynthConfig};
    use crate::imgproc::{ClaheParams, Denoiser};

    fn small_preprocess() -> PreprocessConfig {
        PreprocessConfig {
            mean_k: 9,
            clahe: ClaheParams {
                tile_rows: 2,
                tile_cols: 2,
                ..ClaheParams::default()
            },
            denoiser: Denoiser::gaussian(3),
            ..PreprocessConfig::default()
        }
    }

    fn data(healthy: f64) -> Dataset {
        synth_disks(&SynthConfig {
            count: 20,
            size: 32,
            max_radius: 8.0,
            min_radius: 4.0,
            healthy_fraction: healthy,
            seed: 2,
            ..Default::default()
        })
        .unwrap()
    }

    fn cfg(task: Task, model: ModelSpec) -> BenchmarkConfig {
        BenchmarkConfig {
            model,
            epochs: 3,
            batch_size: 4,
            preprocess: small_preprocess(),
            ..BenchmarkConfig::new(task)
        }
    }

    #[test]
    fn majority_accuracy_is_prevalence() {
        let d = data(0.3);
        let c = cfg(Task::Classify, ModelSpec::Majority);
        let r = run_classification_benchmark(&c, &d, &RunOptions::default()).unwrap();
        let plan = stratified_kfold(&d.labels(), 5, c.seed).unwrap();
        for (f, s) in r.scores.folds.iter().enumerate() {
            let val = plan.validation_indices(f);
            let diseased = val.iter().filter(|&&i| d.labels()[i] == 1).count();
            let expected = diseased as f64 / val.len() as f64;
            assert_eq!(s.get(MetricName::Accuracy), Some(expected));
        }
    }

    #[test]
    fn augmentation_only_on_training_split() {
        let d = data(0.3);
        let r = run_classification_benchmark(&cfg(Task::Classify, ModelSpec::Oracle), &d, &RunOptions::default())
            .unwrap();
        for m in &r.metadata.folds {
            assert_eq!(m.train_samples, 7 * m.train_records);
            assert_eq!(m.validation_samples, m.validation_records);
        }
    }

    #[test]
    fn fold_failure_names_fold() {
        struct Failing;
        impl SegmenterTrainer for Failing {
            fn train(&self, _: &[MaskedImage], _: &[MaskedImage], ctx: &FoldContext) -> Result<TrainedMasker> {
                if ctx.fold == 3 {
                    Err(Error::Training("boom".into()))
                } else {
                    OracleSegmenter.train(&[], &[], ctx)
                }
            }
        }
        let err = run_segmentation_with(&cfg(Task::Segment, ModelSpec::Oracle), &data(0.0), &Failing, &RunOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 3, .. }), "{err}");
        assert!(!err.is_validation());
    }

    #[test]
    fn linear_segmentation_runs() {
        let r = run_segmentation_benchmark(&cfg(Task::Segment, ModelSpec::Linear), &data(0.0), &RunOptions::default())
            .unwrap();
        assert_eq!(r.scores.folds.len(), 5);
        assert!(r.metadata.folds.iter().all(|m| m.best_epoch.is_some()));
    }
}
