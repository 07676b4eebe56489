//! Python bindings: image planes, masks, the preprocessing pipeline,
//! augmentation, metrics, losses, fold planning and the benchmark runner.

use std::collections::BTreeMap;
use std::path::PathBuf;

use otbench_core::augment::{augment_pair_with, AugmentOptions, SampleImage, SamplePair};
use otbench_core::harness::{
    load_dataset, load_manifest, render_report, run_benchmark, write_synth_dataset, BenchmarkConfig, LoadOptions,
    ManifestMode, ModelSpec, ReportFormat, RunOptions, SynthConfig, Task,
};
use otbench_core::imgproc::{self, default_sigma, ClaheParams, Denoiser, NlmdParams, Normalizer, PreprocessConfig};
use otbench_core::optim::{self, LossKind, LossValue, DEFAULT_SMOOTHING};
use otbench_core::{harness, io, metrics, Error};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        e if e.is_validation() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Single-channel image with intensities in `[0, 1]`, stored row-major.
#[pyclass(name = "ImagePlane", module = "otbench", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImagePlane(imgproc::ImagePlane);

#[pymethods]
impl PyImagePlane {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        imgproc::ImagePlane::new(width, height, data).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        imgproc::ImagePlane::from_rows(&rows).map(Self).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn data(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("ImagePlane(width={}, height={})", self.0.width(), self.0.height())
    }
}

#[pyclass(name = "RgbImage", module = "otbench", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRgbImage(imgproc::RgbImage);

#[pymethods]
impl PyRgbImage {
    #[new]
    fn new(red: &PyImagePlane, green: &PyImagePlane, blue: &PyImagePlane) -> PyResult<Self> {
        imgproc::RgbImage::new(red.0.clone(), green.0.clone(), blue.0.clone())
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn channels(&self) -> (PyImagePlane, PyImagePlane, PyImagePlane) {
        let (r, g, b) = imgproc::split_channels(&self.0);
        (PyImagePlane(r), PyImagePlane(g), PyImagePlane(b))
    }

    fn __repr__(&self) -> String {
        format!("RgbImage(width={}, height={})", self.0.width(), self.0.height())
    }
}

/// Binary lesion mask, row-major.
#[pyclass(name = "BinaryMask", module = "otbench", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBinaryMask(metrics::BinaryMask);

#[pymethods]
impl PyBinaryMask {
    #[new]
    fn new(width: usize, height: usize, data: Vec<bool>) -> PyResult<Self> {
        metrics::BinaryMask::new(width, height, data).map(Self).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn data(&self) -> Vec<bool> {
        self.0.data().to_vec()
    }

    fn count(&self) -> usize {
        self.0.count()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "BinaryMask(width={}, height={}, foreground={})",
            self.0.width(),
            self.0.height(),
            self.0.count()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (path, max_side=None))]
fn load_rgb(path: PathBuf, max_side: Option<u32>) -> PyResult<PyRgbImage> {
    io::load_rgb_resized(path, max_side).map(PyRgbImage).map_err(err)
}

#[pyfunction]
fn load_mask(path: PathBuf) -> PyResult<PyBinaryMask> {
    io::load_mask(path).map(PyBinaryMask).map_err(err)
}

#[pyfunction]
fn save_plane(plane: &PyImagePlane, path: PathBuf) -> PyResult<()> {
    io::save_plane(&plane.0, path).map_err(err)
}

#[pyfunction]
fn invert_channel(p: &PyImagePlane) -> PyImagePlane {
    PyImagePlane(imgproc::invert_channel(&p.0))
}

#[pyfunction]
fn mean_filter(p: &PyImagePlane, k: usize) -> PyResult<PyImagePlane> {
    imgproc::mean_filter(&p.0, k).map(PyImagePlane).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, k, sigma=None))]
fn gaussian_filter(p: &PyImagePlane, k: usize, sigma: Option<f64>) -> PyResult<PyImagePlane> {
    imgproc::gaussian_filter(&p.0, sigma.unwrap_or_else(|| default_sigma(k)), k)
        .map(PyImagePlane)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, search_radius=10, patch_radius=3, h=0.1))]
fn nlmd(p: &PyImagePlane, search_radius: usize, patch_radius: usize, h: f64) -> PyResult<PyImagePlane> {
    let params = NlmdParams {
        search_radius,
        patch_radius,
        h,
    };
    imgproc::nlmd(&p.0, &params).map(PyImagePlane).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (p, clip_limit=2.0, tile_rows=8, tile_cols=8, bins=256))]
fn clahe(p: &PyImagePlane, clip_limit: f64, tile_rows: usize, tile_cols: usize, bins: usize) -> PyResult<PyImagePlane> {
    let params = ClaheParams {
        clip_limit,
        tile_rows,
        tile_cols,
        bins,
    };
    imgproc::clahe(&p.0, &params).map(PyImagePlane).map_err(err)
}

#[pyfunction]
fn illumination_equalize(p: &PyImagePlane, k: usize) -> PyResult<PyImagePlane> {
    imgproc::illumination_equalize(&p.0, k).map(PyImagePlane).map_err(err)
}

#[pyfunction]
fn normalize_max(p: &PyImagePlane) -> PyResult<PyImagePlane> {
    imgproc::normalize_max(&p.0).map(PyImagePlane).map_err(err)
}

#[pyfunction]
fn normalize_gaussian(p: &PyImagePlane) -> PyResult<PyImagePlane> {
    imgproc::normalize_gaussian(&p.0).map(PyImagePlane).map_err(err)
}

fn pipeline_config(mean_k: usize, denoise: &str, gaussian_k: usize, normalize: &str) -> PyResult<PreprocessConfig> {
    Ok(PreprocessConfig {
        mean_k,
        clahe: ClaheParams::default(),
        denoiser: match denoise {
            "gaussian" => Denoiser::gaussian(gaussian_k),
            "nlmd" => Denoiser::Nlmd(NlmdParams::default()),
            other => return Err(PyValueError::new_err(format!("unknown denoiser {other:?}"))),
        },
        normalizer: match normalize {
            "max" => Normalizer::Max,
            "gaussian" => Normalizer::GaussianIntensity,
            other => return Err(PyValueError::new_err(format!("unknown normalizer {other:?}"))),
        },
    })
}

/// Inverted green channel, background flattening, CLAHE, denoising and
/// normalization.
#[pyfunction]
#[pyo3(signature = (img, mean_k=51, denoise="gaussian", gaussian_k=51, normalize="max"))]
fn preprocess(img: &PyRgbImage, mean_k: usize, denoise: &str, gaussian_k: usize, normalize: &str) -> PyResult<PyImagePlane> {
    let cfg = pipeline_config(mean_k, denoise, gaussian_k, normalize)?;
    imgproc::preprocess(&img.0, &cfg).map(PyImagePlane).map_err(err)
}

/// Returns `(tag, image, mask)` triples; `image` is an `ImagePlane`.
#[pyfunction]
#[pyo3(signature = (image, mask=None, zoom=false))]
fn augment_pair(
    image: &PyImagePlane,
    mask: Option<&PyBinaryMask>,
    zoom: bool,
) -> PyResult<Vec<(String, PyImagePlane, Option<PyBinaryMask>)>> {
    let pair = SamplePair::gray(image.0.clone(), mask.map(|m| m.0.clone())).map_err(err)?;
    let set = augment_pair_with(&pair, &AugmentOptions { zoom }).map_err(err)?;
    Ok(set
        .into_iter()
        .map(|a| {
            let tag = a.tag.as_str().to_string();
            let (img, mask) = a.pair.into_parts();
            let SampleImage::Gray(plane) = img else {
                unreachable!("gray input yields gray derivatives")
            };
            (tag, PyImagePlane(plane), mask.map(PyBinaryMask))
        })
        .collect())
}

#[pyfunction]
fn dice_score(pred: &PyBinaryMask, gt: &PyBinaryMask) -> PyResult<f64> {
    metrics::dice_score(&pred.0, &gt.0).map_err(err)
}

#[pyfunction]
fn iou_score(pred: &PyBinaryMask, gt: &PyBinaryMask) -> PyResult<f64> {
    metrics::iou_score(&pred.0, &gt.0).map_err(err)
}

#[pyfunction]
fn pixel_accuracy(pred: &PyBinaryMask, gt: &PyBinaryMask) -> PyResult<f64> {
    metrics::pixel_accuracy(&pred.0, &gt.0).map_err(err)
}

/// `{"accuracy": .., "precision": .., "recall": .., "f1": ..}`
#[pyfunction]
#[pyo3(signature = (pred, truth, classes=2))]
fn classification_scores(pred: Vec<usize>, truth: Vec<usize>, classes: usize) -> PyResult<BTreeMap<&'static str, f64>> {
    let s = metrics::classification_scores(&pred, &truth, classes).map_err(err)?;
    Ok(BTreeMap::from([
        ("accuracy", s.accuracy.value),
        ("precision", s.precision.value),
        ("recall", s.recall.value),
        ("f1", s.f1.value),
    ]))
}

/// `(mean, population std)`
#[pyfunction]
fn aggregate_folds(values: Vec<f64>) -> PyResult<(f64, f64)> {
    metrics::aggregate_folds(&values).map(|m| (m.mean, m.std)).map_err(err)
}

fn loss_pair(v: LossValue) -> (f64, Vec<f64>) {
    (v.loss, v.grad)
}

/// `(loss, gradient)`
#[pyfunction]
#[pyo3(signature = (pred, target, eps=DEFAULT_SMOOTHING))]
fn soft_dice_loss(pred: Vec<f64>, target: Vec<bool>, eps: f64) -> PyResult<(f64, Vec<f64>)> {
    optim::soft_dice_loss(&pred, &target, eps).map(loss_pair).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (pred, target, eps=DEFAULT_SMOOTHING))]
fn soft_jaccard_loss(pred: Vec<f64>, target: Vec<bool>, eps: f64) -> PyResult<(f64, Vec<f64>)> {
    optim::soft_jaccard_loss(&pred, &target, eps).map(loss_pair).map_err(err)
}

#[pyfunction]
fn scce_loss(logits: Vec<f64>, label: usize) -> PyResult<(f64, Vec<f64>)> {
    optim::scce_loss(&logits, label).map(loss_pair).map_err(err)
}

/// Zero-based fold index of every label.
#[pyfunction]
#[pyo3(signature = (labels, k=5, seed=0))]
fn stratified_kfold(labels: Vec<usize>, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    harness::stratified_kfold(&labels, k, seed)
        .map(|p| p.assignment)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (labels, batch_size, seed=0))]
fn balanced_batches(labels: Vec<usize>, batch_size: usize, seed: u64) -> PyResult<Vec<Vec<usize>>> {
    harness::balanced_batches(&labels, batch_size, seed).map_err(err)
}

/// Writes a seeded bright-disk dataset and returns the manifest path.
#[pyfunction]
#[pyo3(signature = (dir, count=200, size=64, healthy_fraction=0.0, noise=0.04, seed=0))]
fn write_synth(dir: PathBuf, count: usize, size: usize, healthy_fraction: f64, noise: f64, seed: u64) -> PyResult<PathBuf> {
    let cfg = SynthConfig {
        count,
        size,
        healthy_fraction,
        noise,
        seed,
        ..SynthConfig::default()
    };
    write_synth_dataset(&cfg, dir).map_err(err)
}

/// Runs a cross-validated benchmark over a manifest and returns the
/// rendered report (`format` is "json" or "csv").
#[pyfunction]
#[pyo3(signature = (
    task, manifest, *, model="linear", loss="dice", batch_size=32, lr=1e-4, epochs=200, folds=5, seed=0,
    threshold=0.5, augment=true, mean_k=51, denoise="gaussian", gaussian_k=51, normalize="max",
    max_side=None, threads=None, format="json"
))]
#[allow(clippy::too_many_arguments)]
fn benchmark(
    py: Python<'_>,
    task: &str,
    manifest: PathBuf,
    model: &str,
    loss: &str,
    batch_size: usize,
    lr: f64,
    epochs: usize,
    folds: usize,
    seed: u64,
    threshold: f64,
    augment: bool,
    mean_k: usize,
    denoise: &str,
    gaussian_k: usize,
    normalize: &str,
    max_side: Option<u32>,
    threads: Option<usize>,
    format: &str,
) -> PyResult<String> {
    let (task, mode) = match task {
        "classify" => (Task::Classify, ManifestMode::Classification),
        "segment" => (Task::Segment, ManifestMode::Segmentation),
        other => return Err(PyValueError::new_err(format!("unknown task {other:?}"))),
    };
    let cfg = BenchmarkConfig {
        model: model.parse::<ModelSpec>().map_err(err)?,
        loss: loss.parse::<LossKind>().map_err(err)?,
        batch_size,
        lr,
        epochs,
        folds,
        seed,
        threshold,
        augment,
        preprocess: pipeline_config(mean_k, denoise, gaussian_k, normalize)?,
        ..BenchmarkConfig::new(task)
    };
    let format: ReportFormat = format.parse().map_err(err)?;
    let opts = RunOptions {
        threads,
        ..RunOptions::default()
    };
    py.detach(|| {
        let m = load_manifest(&manifest, mode)?;
        let data = load_dataset(&m, &LoadOptions { max_side })?;
        let report = run_benchmark(&cfg, &data, &opts)?;
        render_report(&report, format)
    })
    .map_err(err)
}

#[pymodule]
fn otbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImagePlane>()?;
    m.add_class::<PyRgbImage>()?;
    m.add_class::<PyBinaryMask>()?;
    m.add_function(wrap_pyfunction!(load_rgb, m)?)?;
    m.add_function(wrap_pyfunction!(load_mask, m)?)?;
    m.add_function(wrap_pyfunction!(save_plane, m)?)?;
    m.add_function(wrap_pyfunction!(invert_channel, m)?)?;
    m.add_function(wrap_pyfunction!(mean_filter, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_filter, m)?)?;
    m.add_function(wrap_pyfunction!(nlmd, m)?)?;
    m.add_function(wrap_pyfunction!(clahe, m)?)?;
    m.add_function(wrap_pyfunction!(illumination_equalize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_max, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(augment_pair, m)?)?;
    m.add_function(wrap_pyfunction!(dice_score, m)?)?;
    m.add_function(wrap_pyfunction!(iou_score, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(classification_scores, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_folds, m)?)?;
    m.add_function(wrap_pyfunction!(soft_dice_loss, m)?)?;
    m.add_function(wrap_pyfunction!(soft_jaccard_loss, m)?)?;
    m.add_function(wrap_pyfunction!(scce_loss, m)?)?;
    m.add_function(wrap_pyfunction!(stratified_kfold, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_batches, m)?)?;
    m.add_function(wrap_pyfunction!(write_synth, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    Ok(())
}
