//! Preprocessing, augmentation, scoring and cross-validated benchmarking for
//! retinal fundus images of ocular toxoplasmosis.
//!
//! - [`imgproc`]: inverted-green-channel pipeline (background flattening,
//!   CLAHE, Gaussian or non-local-means denoising, normalization).
//! - [`augment`]: rotation/flip augmentation of image/mask pairs.
//! - [`metrics`]: accuracy, precision, recall, F1, Dice, IoU, fold aggregation.
//! - [`optim`]: soft Dice/Jaccard and cross-entropy losses, Adam, and small
//!   linear baselines for pixel segmentation and image classification.
//! - [`harness`]: manifests, stratified folds, balanced batches, the two
//!   benchmark loops and report emission.

pub mod augment;
pub mod error;
pub mod harness;
pub mod imgproc;
pub mod io;
pub mod metrics;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
