//! Datasets, folds, batches, the benchmark loops and reports.

mod batching;
mod benchmark;
mod dataset;
mod folds;
mod manifest;
mod report;
mod synth;

pub use batching::balanced_batches;
pub use benchmark::{
    run_benchmark, run_classification_benchmark, run_classification_with, run_segmentation_benchmark,
    run_segmentation_with, BenchmarkConfig, ClassifierTrainer, FoldContext, LabelPredictor, LinearClassifier,
    LinearSegmenter, MajorityClassifier, MajoritySegmenter, MaskPredictor, ModelSpec, OracleClassifier,
    OracleSegmenter, RunOptions, SegmenterTrainer, Task, TrainedMasker, THREADS_ENV,
};
pub use dataset::{load_dataset, Dataset, LoadOptions, Sample};
pub use folds::{stratified_kfold, FoldPlan};
pub use manifest::{
    load_manifest, ClassLabel, DatasetManifest, LesionType, ManifestMode, ManifestRecord, MANIFEST_HEADER,
};
pub use report::{
    emit_report, load_report, read_fold_table, render_report, BenchmarkReport, FoldMeta, ReportFormat,
    RunMetadata, ScoreTable,
};
pub use synth::{synth_disks, write_synth_dataset, SynthConfig};
