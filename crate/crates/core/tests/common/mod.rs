//! Independent slow implementations used as oracles.

#![allow(dead_code)]

use std::collections::HashSet;

use otbench_core::imgproc::{ImagePlane, RgbImage};
use otbench_core::metrics::BinaryMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mirror `i` back into `0..n` with the edge sample repeated.
pub fn mirror(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

pub fn px(p: &ImagePlane, r: isize, c: isize) -> f64 {
    p.get(mirror(r, p.height()), mirror(c, p.width()))
}

pub fn random_plane(rng: &mut impl Rng, max_side: usize) -> ImagePlane {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    ImagePlane::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

pub fn random_rgb(rng: &mut impl Rng, w: usize, h: usize) -> RgbImage {
    let mut plane = |base: f64| {
        let data = (0..w * h)
            .map(|i| {
                let (r, c) = ((i / w) as f64, (i % w) as f64);
                (base + 0.2 * (r / h as f64) - 0.1 * (c / w as f64) + 0.3 * rng.random::<f64>()).clamp(0.0, 1.0)
            })
            .collect();
        ImagePlane::new(w, h, data).unwrap()
    };
    let (r, g, b) = (plane(0.5), plane(0.25), plane(0.1));
    RgbImage::new(r, g, b).unwrap()
}

pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(density)).collect()).unwrap()
}

/// Weighted neighbourhood sum with a `k x k` weight function.
pub fn brute_convolve(p: &ImagePlane, k: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let rad = (k / 2) as isize;
    let mut out = Vec::with_capacity(p.len());
    for r in 0..p.height() as isize {
        for c in 0..p.width() as isize {
            let mut acc = 0.0;
            for i in 0..k {
                for j in 0..k {
                    acc += weight(i, j) * px(p, r + i as isize - rad, c + j as isize - rad);
                }
            }
            out.push(acc);
        }
    }
    out
}

pub fn brute_mean(p: &ImagePlane, k: usize) -> Vec<f64> {
    let w = 1.0 / (k * k) as f64;
    brute_convolve(p, k, |_, _| w)
}

/// Gaussian weights from the closed form, normalized over the window.
pub fn brute_gaussian(p: &ImagePlane, sigma: f64, k: usize) -> Vec<f64> {
    let rad = (k / 2) as f64;
    let raw = |i: usize, j: usize| {
        let (y, x) = (i as f64 - rad, j as f64 - rad);
        (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    };
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            total += raw(i, j);
        }
    }
    brute_convolve(p, k, |i, j| raw(i, j) / total)
}

/// Patch-distance weighted average over the search window.
pub fn brute_nlmd(p: &ImagePlane, search: usize, patch: usize, h: f64) -> Vec<f64> {
    let (s, pr) = (search as isize, patch as isize);
    let mut out = Vec::with_capacity(p.len());
    for r in 0..p.height() as isize {
        for c in 0..p.width() as isize {
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -s..=s {
                for dx in -s..=s {
                    let mut d = 0.0;
                    for a in -pr..=pr {
                        for b in -pr..=pr {
                            let diff = px(p, r + a, c + b) - px(p, r + dy + a, c + dx + b);
                            d += diff * diff;
                        }
                    }
                    let wgt = (-d / (h * h)).exp();
                    num += wgt * px(p, r + dy, c + dx);
                    den += wgt;
                }
            }
            out.push((num / den).clamp(0.0, 1.0));
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn positives(m: &BinaryMask) -> HashSet<usize> {
    m.data().iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i).collect()
}

/// Dice, IoU and pixel accuracy from explicit index sets.
pub fn set_scores(pred: &BinaryMask, gt: &BinaryMask) -> (f64, f64, f64) {
    let (x, y) = (positives(pred), positives(gt));
    let inter = x.intersection(&y).count() as f64;
    let union = x.union(&y).count() as f64;
    let dice = if x.is_empty() && y.is_empty() {
        1.0
    } else {
        2.0 * inter / (x.len() + y.len()) as f64
    };
    let iou = if union == 0.0 { 1.0 } else { inter / union };
    let sym_diff = x.symmetric_difference(&y).count() as f64;
    (dice, iou, (pred.len() as f64 - sym_diff) / pred.len() as f64)
}

/// `(tp, fp, tn, fn)` by enumerating every position.
pub fn enumerate_counts(pred: &[usize], truth: &[usize], positive: usize) -> (usize, usize, usize, usize) {
    let tp: HashSet<usize> = (0..pred.len()).filter(|&i| pred[i] == positive && truth[i] == positive).collect();
    let fp: HashSet<usize> = (0..pred.len()).filter(|&i| pred[i] == positive && truth[i] != positive).collect();
    let tn: HashSet<usize> = (0..pred.len()).filter(|&i| pred[i] != positive && truth[i] != positive).collect();
    let fn_: HashSet<usize> = (0..pred.len()).filter(|&i| pred[i] != positive && truth[i] == positive).collect();
    (tp.len(), fp.len(), tn.len(), fn_.len())
}

/// Central difference of `f` along each coordinate.
pub fn numeric_grad(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise relative error, with `floor` guarding near-zero
/// components.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Published five-fold scores of five pretrained classifiers: per-fold Acc,
/// Pr, Re, F1 and the printed mean and spread of each column.
pub struct PrintedModel {
    pub name: &'static str,
    pub folds: [[f64; 4]; 5],
    pub avg: [(f64, f64); 4],
}

pub const PUBLISHED_FOLDS: [PrintedModel; 5] = [
    PrintedModel {
        name: "VGG16",
        folds: [
            [0.929, 0.931, 0.929, 0.929],
            [0.951, 0.951, 0.951, 0.951],
            [1.000, 1.000, 1.000, 1.000],
            [1.000, 1.000, 1.000, 1.000],
            [1.000, 1.000, 1.000, 1.000],
        ],
        avg: [(0.976, 0.030), (0.976, 0.029), (0.976, 0.030), (0.976, 0.030)],
    },
    PrintedModel {
        name: "DenseNet121",
        folds: [
            [0.976, 0.978, 0.976, 0.976],
            [0.976, 0.976, 0.976, 0.975],
            [1.000, 1.000, 1.000, 1.000],
            [1.000, 1.000, 1.000, 1.000],
            [0.976, 0.977, 0.976, 0.976],
        ],
        avg: [(0.985, 0.012), (0.986, 0.011), (0.986, 0.012), (0.985, 0.012)],
    },
    PrintedModel {
        name: "ResNet50",
        folds: [
            [0.967, 0.971, 0.967, 0.967],
            [0.967, 0.968, 0.967, 0.966],
            [0.966, 0.968, 0.966, 0.966],
            [0.966, 0.971, 0.966, 0.967],
            [1.000, 1.000, 1.000, 1.000],
        ],
        avg: [(0.973, 0.013), (0.976, 0.012), (0.973, 0.013), (0.973, 0.013)],
    },
    PrintedModel {
        name: "InceptionV3",
        folds: [
            [0.980, 0.967, 0.993, 0.980],
            [0.990, 0.978, 1.000, 0.989],
            [0.970, 0.963, 0.993, 0.978],
            [0.980, 0.988, 0.967, 0.977],
            [0.990, 0.979, 1.000, 0.989],
        ],
        avg: [(0.982, 0.008), (0.975, 0.009), (0.991, 0.015), (0.983, 0.005)],
    },
    PrintedModel {
        name: "MobileNetV2",
        folds: [
            [0.990, 0.987, 0.993, 0.990],
            [0.995, 0.993, 0.997, 0.995],
            [0.980, 0.975, 0.986, 0.980],
            [0.985, 0.980, 0.990, 0.985],
            [0.995, 0.992, 0.998, 0.995],
        ],
        avg: [(0.989, 0.006), (0.985, 0.006), (0.993, 0.004), (0.989, 0.006)],
    },
];

pub const PUBLISHED_COLUMNS: [&str; 4] = ["Acc", "Pr", "Re", "F1"];
