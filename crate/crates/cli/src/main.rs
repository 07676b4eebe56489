//! `otbench` command-line interface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otbench_core::augment::{augment_pair_with, AugmentOptions, SampleImage, SamplePair};
use otbench_core::harness::{
    emit_report, load_dataset, load_manifest, load_report, read_fold_table, render_report, run_benchmark,
    stratified_kfold, write_synth_dataset, BenchmarkConfig, ClassLabel, LoadOptions, ManifestMode, ModelSpec,
    ReportFormat, RunOptions, ScoreTable, SynthConfig, Task,
};
use otbench_core::imgproc::{default_sigma, preprocess, Denoiser, NlmdParams, Normalizer, PreprocessConfig};
use otbench_core::io::{load_mask, load_rgb_resized, save_mask, save_plane, save_rgb};
use otbench_core::metrics::{classification_scores, confusion_counts, dice_score, iou_score, pixel_accuracy};
use otbench_core::optim::LossKind;
use otbench_core::{Error, Result};

#[derive(Parser)]
#[command(name = "otbench", version, about = "Fundus image preprocessing and cross-validated benchmarking")]
struct Cli {
    /// Master seed for folds, batches, initialization and synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory; text output goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the preprocessing pipeline on one image and write the result as PNG.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        resize: Option<u32>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Write the six augmented derivatives of an image (and its mask).
    Augment {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Also write a center-crop zoom derivative.
        #[arg(long)]
        zoom: bool,
    },
    /// Assign manifest records to stratified folds.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Split only the diseased records, as the segmentation benchmark does.
        #[arg(long)]
        segmentation: bool,
    },
    /// Cross-validated benchmark.
    Benchmark {
        #[command(subcommand)]
        task: BenchmarkTask,
    },
    /// Score existing predictions.
    Evaluate {
        #[command(subcommand)]
        what: EvaluateKind,
    },
    /// Re-render a saved report, or aggregate a per-fold score table.
    Report {
        /// JSON report written by `benchmark`.
        #[arg(long, conflicts_with = "folds", required_unless_present = "folds")]
        input: Option<PathBuf>,
        /// CSV with header `fold,<metric>,...` and one row per fold.
        #[arg(long)]
        folds: Option<PathBuf>,
    },
    /// Write a seeded synthetic bright-disk dataset with a manifest.
    Synth {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0.0)]
        healthy_fraction: f64,
        #[arg(long, default_value_t = 0.04)]
        noise: f64,
    },
}

#[derive(Subcommand)]
enum BenchmarkTask {
    Classify(BenchmarkArgs),
    Segment(BenchmarkArgs),
}

#[derive(Subcommand)]
enum EvaluateKind {
    /// Compare prediction masks to ground-truth masks with the same file names.
    Masks {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Score a CSV with header `label,prediction` (healthy/diseased or 0/1).
    Labels {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Dice)]
    loss: LossArg,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.0001)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Linear)]
    model: ModelArg,
    /// Train on the original training images only.
    #[arg(long)]
    no_augment: bool,
    /// Downscale images so the longer side is at most this many pixels.
    #[arg(long)]
    resize: Option<u32>,
    /// Fold worker threads; overrides OTBENCH_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Record start and finish times in the report metadata.
    #[arg(long)]
    timestamps: bool,
    /// Save each fold's trained model as `fold_<i>.json` here.
    #[arg(long)]
    model_dir: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct PipelineArgs {
    /// Background-estimation mean filter window.
    #[arg(long, default_value_t = 51)]
    mean_k: usize,
    #[arg(long, value_enum, default_value_t = DenoiseArg::Gaussian)]
    denoise: DenoiseArg,
    /// Gaussian window; sigma defaults to (k - 1) / 6.
    #[arg(long, default_value_t = 51)]
    gaussian_k: usize,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = NormalizeArg::Max)]
    normalize: NormalizeArg,
    #[arg(long)]
    clahe_clip: Option<f64>,
}

impl PipelineArgs {
    fn config(&self) -> PreprocessConfig {
        let mut cfg = PreprocessConfig {
            mean_k: self.mean_k,
            denoiser: match self.denoise {
                DenoiseArg::Gaussian => Denoiser::Gaussian {
                    sigma: self.sigma.unwrap_or_else(|| default_sigma(self.gaussian_k)),
                    k: self.gaussian_k,
                },
                DenoiseArg::Nlmd => Denoiser::Nlmd(NlmdParams::default()),
            },
            normalizer: match self.normalize {
                NormalizeArg::Max => Normalizer::Max,
                NormalizeArg::Gaussian => Normalizer::GaussianIntensity,
            },
            ..PreprocessConfig::default()
        };
        if let Some(clip) = self.clahe_clip {
            cfg.clahe.clip_limit = clip;
        }
        cfg
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Dice,
    Jaccard,
    /// Binary cross-entropy, for comparison only.
    Bce,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Linear,
    Oracle,
    Majority,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenoiseArg {
    Gaussian,
    Nlmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Max,
    Gaussian,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}

fn require_out(cli: &Cli) -> Result<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("this command needs --out".into()))
}

/// Writes `text` to `--out`, or stdout without it.
fn deliver(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            fs::write(path, text).map_err(|e| io_error(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess {
            input,
            resize,
            pipeline,
        } => {
            let out = require_out(cli)?;
            let img = load_rgb_resized(input, *resize)?;
            save_plane(&preprocess(&img, &pipeline.config())?, out)
        }
        Command::Augment { image, mask, zoom } => augment(cli, image, mask.as_deref(), *zoom),
        Command::Split {
            manifest,
            folds,
            segmentation,
        } => split(cli, manifest, *folds, *segmentation),
        Command::Benchmark { task } => benchmark(cli, task),
        Command::Evaluate { what } => match what {
            EvaluateKind::Masks { pred, truth } => evaluate_masks(cli, pred, truth),
            EvaluateKind::Labels { input } => evaluate_labels(cli, input),
        },
        Command::Report { input, folds } => report(cli, input.as_deref(), folds.as_deref()),
        Command::Synth {
            count,
            size,
            healthy_fraction,
            noise,
        } => {
            let cfg = SynthConfig {
                count: *count,
                size: *size,
                healthy_fraction: *healthy_fraction,
                noise: *noise,
                seed: cli.seed,
                ..SynthConfig::default()
            };
            let manifest = write_synth_dataset(&cfg, require_out(cli)?)?;
            println!("{}", manifest.display());
            Ok(())
        }
    }
}

fn augment(cli: &Cli, image: &Path, mask: Option<&Path>, zoom: bool) -> Result<()> {
    let dir = require_out(cli)?;
    let pair = SamplePair::rgb(load_rgb_resized(image, None)?, mask.map(load_mask).transpose()?)?;
    let stem = image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    for derived in augment_pair_with(&pair, &AugmentOptions { zoom })? {
        let name = format!("{stem}{}", derived.tag.suffix());
        match derived.pair.image() {
            SampleImage::Rgb(rgb) => save_rgb(rgb, dir.join(format!("{name}.png")))?,
            SampleImage::Gray(plane) => save_plane(plane, dir.join(format!("{name}.png")))?,
        }
        if let Some(m) = derived.pair.mask() {
            save_mask(m, dir.join(format!("{name}_mask.png")))?;
        }
        println!("{name}");
    }
    Ok(())
}

fn split(cli: &Cli, manifest: &Path, folds: usize, segmentation: bool) -> Result<()> {
    let mode = if segmentation {
        ManifestMode::Segmentation
    } else {
        ManifestMode::Classification
    };
    let mut m = load_manifest(manifest, mode)?;
    if segmentation {
        m = m.diseased();
    }
    let plan = stratified_kfold(&m.labels(), folds, cli.seed)?;
    let text = match cli.format {
        Format::Csv => {
            let mut s = String::from("image_path,label,fold\n");
            for (i, r) in m.records().iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", r.image_path.display(), r.label, plan.fold_of(i) + 1);
            }
            s
        }
        Format::Json => {
            let folds: Vec<serde_json::Value> = (0..folds)
                .map(|f| {
                    let paths: Vec<String> = plan
                        .validation_indices(f)
                        .into_iter()
                        .map(|i| m.records()[i].image_path.display().to_string())
                        .collect();
                    serde_json::json!({ "fold": f + 1, "validation": paths })
                })
                .collect();
            let doc = serde_json::json!({ "k": folds.len(), "seed": cli.seed, "folds": folds });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    deliver(cli, &text)
}

fn benchmark(cli: &Cli, task: &BenchmarkTask) -> Result<()> {
    let (task, args) = match task {
        BenchmarkTask::Classify(a) => (Task::Classify, a),
        BenchmarkTask::Segment(a) => (Task::Segment, a),
    };
    let mode = match task {
        Task::Classify => ManifestMode::Classification,
        Task::Segment => ManifestMode::Segmentation,
    };
    let cfg = BenchmarkConfig {
        model: match args.model {
            ModelArg::Linear => ModelSpec::Linear,
            ModelArg::Oracle => ModelSpec::Oracle,
            ModelArg::Majority => ModelSpec::Majority,
        },
        loss: match args.loss {
            LossArg::Dice => LossKind::Dice,
            LossArg::Jaccard => LossKind::Jaccard,
            LossArg::Bce => LossKind::Bce,
        },
        batch_size: args.batch_size,
        lr: args.lr,
        epochs: args.epochs,
        folds: args.folds,
        seed: cli.seed,
        threshold: args.threshold,
        augment: !args.no_augment,
        preprocess: args.pipeline.config(),
        ..BenchmarkConfig::new(task)
    };
    cfg.validate()?;
    let mut opts = RunOptions::from_env()?;
    if args.threads.is_some() {
        opts.threads = args.threads;
    }
    opts.record_timestamps = args.timestamps;
    opts.model_dir = args.model_dir.clone();

    let manifest = load_manifest(&args.manifest, mode)?;
    let data = load_dataset(&manifest, &LoadOptions { max_side: args.resize })?;
    let report = run_benchmark(&cfg, &data, &opts)?;
    match &cli.out {
        Some(path) => emit_report(&report, cli.format.into(), path),
        None => deliver(cli, &render_report(&report, cli.format.into())?),
    }
}

fn png_names(dir: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| io_error(dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".png"))
        .collect();
    names.sort();
    Ok(names)
}

fn evaluate_masks(cli: &Cli, pred: &Path, truth: &Path) -> Result<()> {
    let names = png_names(truth)?;
    if names.is_empty() {
        return Err(Error::Empty(format!("no PNG masks in {}", truth.display())));
    }
    let mut rows = Vec::with_capacity(names.len());
    for name in &names {
        let p = pred.join(name);
        if !p.exists() {
            return Err(Error::InvalidParameter(format!("no prediction for {name} in {}", pred.display())));
        }
        let (pm, gm) = (load_mask(&p)?, load_mask(truth.join(name))?);
        rows.push((name.clone(), [pixel_accuracy(&pm, &gm)?, dice_score(&pm, &gm)?, iou_score(&pm, &gm)?]));
    }
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..3).map(|j| rows.iter().map(|r| r.1[j]).sum::<f64>() / n).collect();
    let columns = ["pixel_accuracy", "dice", "iou"];
    let text = match cli.format {
        Format::Csv => {
            let mut s = format!("image,{}\n", columns.join(","));
            for (name, v) in &rows {
                let _ = writeln!(s, "{name},{:.3},{:.3},{:.3}", v[0], v[1], v[2]);
            }
            let _ = writeln!(s, "mean,{:.3},{:.3},{:.3}", mean[0], mean[1], mean[2]);
            s
        }
        Format::Json => {
            let per_image: Vec<serde_json::Value> = rows
                .iter()
                .map(|(name, v)| serde_json::json!({ "image": name, "pixel_accuracy": v[0], "dice": v[1], "iou": v[2] }))
                .collect();
            let doc = serde_json::json!({
                "images": rows.len(),
                "mean": { "pixel_accuracy": mean[0], "dice": mean[1], "iou": mean[2] },
                "per_image": per_image,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    deliver(cli, &text)
}

fn parse_label(s: &str, row: usize) -> Result<usize> {
    let s = s.trim();
    s.parse::<ClassLabel>()
        .map(ClassLabel::index)
        .or_else(|_| s.parse::<usize>())
        .ok()
        .filter(|&l| l < 2)
        .ok_or_else(|| Error::InvalidParameter(format!("row {row}: unknown label {s:?}")))
}

fn evaluate_labels(cli: &Cli, input: &Path) -> Result<()> {
    let text = fs::read_to_string(input).map_err(|e| io_error(input, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("label,prediction") {
        return Err(Error::InvalidParameter(format!(
            "{}: header must be label,prediction",
            input.display()
        )));
    }
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let (t, p) = line
            .split_once(',')
            .ok_or_else(|| Error::InvalidParameter(format!("row {row}: expected two fields")))?;
        truth.push(parse_label(t, row)?);
        pred.push(parse_label(p, row)?);
    }
    if truth.is_empty() {
        return Err(Error::Empty(format!("{} has no rows", input.display())));
    }
    let s = classification_scores(&pred, &truth, 2)?;
    let c = confusion_counts(&pred, &truth, &1)?;
    let out = match cli.format {
        Format::Csv => format!(
            "metric,value\naccuracy,{:.3}\nprecision,{:.3}\nrecall,{:.3}\nf1,{:.3}\ntp,{}\nfp,{}\ntn,{}\nfn,{}\n",
            s.accuracy.value, s.precision.value, s.recall.value, s.f1.value, c.tp, c.fp, c.tn, c.fn_
        ),
        Format::Json => {
            let doc = serde_json::json!({ "scores": s, "counts": c });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    deliver(cli, &out)
}

fn report(cli: &Cli, input: Option<&Path>, folds: Option<&Path>) -> Result<()> {
    if let Some(path) = input {
        let r = load_report(path)?;
        return deliver(cli, &render_report(&r, cli.format.into())?);
    }
    let path = folds.ok_or_else(|| Error::InvalidParameter("report needs --input or --folds".into()))?;
    let table = ScoreTable::from_folds(read_fold_table(path)?)?;
    let text = match cli.format {
        Format::Csv => table.to_csv(),
        Format::Json => serde_json::to_string_pretty(&table)? + "\n",
    };
    deliver(cli, &text)
}
