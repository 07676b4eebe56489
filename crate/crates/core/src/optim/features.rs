//! Hand-crafted features for the linear baselines.

use serde::{Deserialize, Serialize};

use crate::imgproc::{box_mean, reflect_index, ImagePlane};

pub const PIXEL_FEATURES: usize = 4;

/// Columns below this spread are treated as constant and zeroed.
const MIN_SPREAD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelFeatureConfig {
    /// Window of the local mean and local standard deviation.
    pub window: usize,
}

impl Default for PixelFeatureConfig {
    fn default() -> Self {
        Self { window: 5 }
    }
}

/// Per-pixel `[intensity, local mean, local std, Sobel magnitude]`, before
/// standardization.
pub fn raw_pixel_features(img: &ImagePlane, cfg: &PixelFeatureConfig) -> Vec<[f64; PIXEL_FEATURES]> {
    let (w, h) = img.dims();
    let data = img.data();
    let local_mean = box_mean(data, w, h, cfg.window);
    let squares: Vec<f64> = data.iter().map(|v| v * v).collect();
    let local_sq = box_mean(&squares, w, h, cfg.window);

    let at = |r: isize, c: isize| data[reflect_index(r, h) * w + reflect_index(c, w)];
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let i = r as usize * w + c as usize;
            let var = (local_sq[i] - local_mean[i] * local_mean[i]).max(0.0);
            let std = if var < MIN_SPREAD * MIN_SPREAD { 0.0 } else { var.sqrt() };
            let gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            let gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            out.push([data[i], local_mean[i], std, (gx * gx + gy * gy).sqrt()]);
        }
    }
    out
}

/// Raw features with each column standardized over the image.
pub fn extract_pixel_features(img: &ImagePlane, cfg: &PixelFeatureConfig) -> Vec<[f64; PIXEL_FEATURES]> {
    let mut rows = raw_pixel_features(img, cfg);
    standardize_columns(&mut rows);
    rows
}

pub(crate) fn standardize_columns<const N: usize>(rows: &mut [[f64; N]]) {
    let n = rows.len() as f64;
    for j in 0..N {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        for r in rows.iter_mut() {
            r[j] = if std < MIN_SPREAD { 0.0 } else { (r[j] - mean) / std };
        }
    }
}

pub const IMAGE_FEATURES: usize = 5;

/// Global statistics of a plane: mean, population std and the 10th, 50th
/// and 90th percentiles (nearest rank).
pub fn pooled_image_features(img: &ImagePlane) -> [f64; IMAGE_FEATURES] {
    let n = img.len();
    let mean = img.mean();
    let std = (img.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    let mut sorted = img.data().to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
    [mean, std, q(0.1), q(0.5), q(0.9)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::mean_filter;

    #[test]
    fn constant_plane_has_flat_texture() {
        let p = ImagePlane::filled(9, 6, 0.37).unwrap();
        let raw = raw_pixel_features(&p, &PixelFeatureConfig::default());
        assert_eq!(raw.len(), 54);
        for f in &raw {
            assert!(f[2].abs() <= 1e-12);
            assert_eq!(f[3], 0.0);
        }
        let std = extract_pixel_features(&p, &PixelFeatureConfig::default());
        assert!(std.iter().all(|f| f.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn local_mean_column_is_mean_filter() {
        let p = ImagePlane::from_fn(11, 8, |r, c| ((r * 7 + c * 3) % 10) as f64 / 9.0).unwrap();
        let raw = raw_pixel_features(&p, &PixelFeatureConfig::default());
        let mf = mean_filter(&p, 5).unwrap();
        for (f, m) in raw.iter().zip(mf.data()) {
            assert_eq!(f[1], *m);
        }
    }

    #[test]
    fn standardized_columns() {
        let p = ImagePlane::from_fn(12, 12, |r, c| ((r * 5 + c * c) % 13) as f64 / 12.0).unwrap();
        let f = extract_pixel_features(&p, &PixelFeatureConfig::default());
        for j in 0..PIXEL_FEATURES {
            let mean = f.iter().map(|r| r[j]).sum::<f64>() / f.len() as f64;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn pooled_stats() {
        let p = ImagePlane::new(10, 1, (1..=10).map(|i| i as f64 / 10.0).collect()).unwrap();
        let f = pooled_image_features(&p);
        assert!((f[0] - 0.55).abs() < 1e-12);
        assert_eq!(f[2], 0.1);
        assert_eq!(f[3], 0.5);
        assert_eq!(f[4], 0.9);
    }
}
