//! Linear neighborhood filters with reflect padding.
//!
//! All filters here are separable and symmetric. Each 1-D pass sums the two
//! mirrored taps of an offset before weighting them, so the result is
//! bit-identical under horizontal and vertical flips of the input.

use crate::error::{Error, Result};
use crate::imgproc::plane::{reflect_index, ImagePlane};

/// Square convolution kernel with non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        check_odd(size)?;
        if weights.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "kernel weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "kernel weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at kernel row `i`, column `j`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.size + j]
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }
}

pub(crate) fn check_odd(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "window size must be odd and positive, got {k}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    Ok(())
}

/// The default width used when only a window size is given: the window
/// spans plus/minus three standard deviations.
pub fn default_sigma(k: usize) -> f64 {
    if k <= 1 {
        1.0
    } else {
        (k - 1) as f64 / 6.0
    }
}

/// Centered 2-D Gaussian, offsets measured from `(k - 1) / 2`, renormalized
/// to unit sum. The `1 / (2 pi sigma^2)` prefactor cancels in the
/// normalization.
pub fn gaussian_kernel(sigma: f64, k: usize) -> Result<Kernel> {
    check_sigma(sigma)?;
    check_odd(k)?;
    let center = ((k - 1) / 2) as f64;
    let two_var = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let di = i as f64 - center;
            let dj = j as f64 - center;
            weights.push((-(di * di + dj * dj) / two_var).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Kernel::new(k, weights)
}

/// Normalized 1-D Gaussian taps for offsets `0..=radius`; the 2-D kernel is
/// the outer product of the full profile with itself.
fn gaussian_half_profile(sigma: f64, k: usize) -> Vec<f64> {
    let r = k / 2;
    let two_var = 2.0 * sigma * sigma;
    let taps: Vec<f64> = (0..=r)
        .map(|d| (-((d * d) as f64) / two_var).exp())
        .collect();
    let total = taps[0] + 2.0 * taps[1..].iter().sum::<f64>();
    taps.into_iter().map(|t| t / total).collect()
}

pub fn mean_filter(p: &ImagePlane, k: usize) -> Result<ImagePlane> {
    check_odd(k)?;
    let ones = vec![1.0; k / 2 + 1];
    let sums = separable_symmetric(p.data(), p.width(), p.height(), &ones);
    let area = (k * k) as f64;
    Ok(ImagePlane::from_raw(
        p.width(),
        p.height(),
        sums.into_iter().map(|s| s / area).collect(),
    ))
}

pub fn gaussian_filter(p: &ImagePlane, sigma: f64, k: usize) -> Result<ImagePlane> {
    check_sigma(sigma)?;
    check_odd(k)?;
    let half = gaussian_half_profile(sigma, k);
    let out = separable_symmetric(p.data(), p.width(), p.height(), &half);
    Ok(ImagePlane::from_raw(p.width(), p.height(), out))
}

/// Background flattening: subtract the `k x k` local mean, add back the
/// global mean, clamp into `[0, 1]`. Evaluated as `(p - background) + mean`.
pub fn illumination_equalize(p: &ImagePlane, k: usize) -> Result<ImagePlane> {
    let background = mean_filter(p, k)?;
    let u = p.mean();
    let data = p
        .data()
        .iter()
        .zip(background.data())
        .map(|(&v, &bg)| ((v - bg) + u).clamp(0.0, 1.0))
        .collect();
    Ok(ImagePlane::from_raw(p.width(), p.height(), data))
}

/// Box mean over a `k x k` window for arbitrary real data (no range check).
pub(crate) fn box_mean(data: &[f64], width: usize, height: usize, k: usize) -> Vec<f64> {
    let ones = vec![1.0; k / 2 + 1];
    let area = (k * k) as f64;
    separable_symmetric(data, width, height, &ones)
        .into_iter()
        .map(|s| s / area)
        .collect()
}

/// Rows then columns; `half[d]` weights the taps at offsets `-d` and `+d`.
pub(crate) fn separable_symmetric(
    data: &[f64],
    width: usize,
    height: usize,
    half: &[f64],
) -> Vec<f64> {
    let r = half.len() - 1;
    let mut tmp = vec![0.0; data.len()];
    let mut padded = vec![0.0; width + 2 * r];
    for (src, dst) in data.chunks_exact(width).zip(tmp.chunks_exact_mut(width)) {
        for (i, slot) in padded.iter_mut().enumerate() {
            *slot = src[reflect_index(i as isize - r as isize, width)];
        }
        for (c, out) in dst.iter_mut().enumerate() {
            let center = c + r;
            let mut acc = half[0] * padded[center];
            for d in 1..=r {
                acc += half[d] * (padded[center - d] + padded[center + d]);
            }
            *out = acc;
        }
    }

    let mut out = vec![0.0; data.len()];
    for row in 0..height {
        let dst = &mut out[row * width..(row + 1) * width];
        let mid = &tmp[row * width..(row + 1) * width];
        for (o, &m) in dst.iter_mut().zip(mid) {
            *o = half[0] * m;
        }
        for (d, &w) in half.iter().enumerate().skip(1) {
            let up = reflect_index(row as isize - d as isize, height) * width;
            let down = reflect_index((row + d) as isize, height) * width;
            for (c, o) in dst.iter_mut().enumerate() {
                *o += w * (tmp[up + c] + tmp[down + c]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize, value: f64) -> ImagePlane {
        let c = n / 2;
        ImagePlane::from_fn(n, n, |r, col| if r == c && col == c { value } else { 0.0 }).unwrap()
    }

    #[test]
    fn mean_of_constant() {
        let p = ImagePlane::filled(7, 5, 0.3).unwrap();
        for k in [1, 3, 5, 9] {
            let out = mean_filter(&p, k).unwrap();
            assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-15));
        }
    }

    #[test]
    fn mean_impulse_center() {
        let out = mean_filter(&impulse(3, 0.9), 3).unwrap();
        assert!((out.get(1, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn even_or_zero_window_rejected() {
        let p = ImagePlane::filled(4, 4, 0.5).unwrap();
        assert!(mean_filter(&p, 2).is_err());
        assert!(mean_filter(&p, 0).is_err());
        assert!(illumination_equalize(&p, 4).is_err());
        assert!(gaussian_kernel(1.0, 4).is_err());
        assert!(gaussian_kernel(0.0, 3).is_err());
        assert!(gaussian_kernel(-1.0, 3).is_err());
        assert!(gaussian_filter(&p, 1.0, 2).is_err());
    }

    #[test]
    fn equalize_constant_is_fixed_point() {
        let p = ImagePlane::filled(6, 6, 0.42).unwrap();
        let out = illumination_equalize(&p, 5).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-12));
    }

    #[test]
    fn equalize_impulse_center() {
        // background at the center is 0.9 / 9 and the global mean is 0.1
        let out = illumination_equalize(&impulse(3, 0.9), 3).unwrap();
        assert!((out.get(1, 1) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn kernel_single_tap() {
        let k = gaussian_kernel(2.5, 1).unwrap();
        assert_eq!(k.weights(), &[1.0]);
    }

    #[test]
    fn kernel_three_by_three() {
        let k = gaussian_kernel(1.0, 3).unwrap();
        let ring1 = (-0.5f64).exp();
        let ring2 = (-1.0f64).exp();
        let total = 1.0 + 4.0 * ring1 + 4.0 * ring2;
        assert!((total - 4.8976).abs() < 1e-4);
        assert!((k.at(1, 1) - 1.0 / total).abs() < 1e-15);
        assert!((k.at(1, 1) - 0.2042).abs() < 1e-4);
        assert!((k.at(0, 1) - ring1 / total).abs() < 1e-15);
        assert!((k.at(0, 0) - ring2 / total).abs() < 1e-15);
    }

    #[test]
    fn kernel_sum_and_symmetry() {
        for &(sigma, k) in &[(0.5, 3), (1.0, 5), (2.0, 7), (8.0, 51), (3.3, 11)] {
            let kern = gaussian_kernel(sigma, k).unwrap();
            let sum: f64 = kern.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            for i in 0..k {
                for j in 0..k {
                    let w = kern.at(i, j);
                    assert_eq!(w, kern.at(k - 1 - i, j));
                    assert_eq!(w, kern.at(i, k - 1 - j));
                    assert!((w - kern.at(j, i)).abs() < 1e-18);
                }
            }
        }
    }

    #[test]
    fn gaussian_of_constant() {
        let p = ImagePlane::filled(9, 9, 0.7).unwrap();
        let out = gaussian_filter(&p, 1.5, 7).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn gaussian_impulse_reproduces_kernel() {
        let n = 21;
        let (sigma, k) = (1.3, 7);
        let out = gaussian_filter(&impulse(n, 1.0), sigma, k).unwrap();
        let kern = gaussian_kernel(sigma, k).unwrap();
        let c = n / 2;
        let r = k / 2;
        for i in 0..k {
            for j in 0..k {
                let got = out.get(c + i - r, c + j - r);
                assert!((got - kern.at(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn window_wider_than_image() {
        let p = ImagePlane::new(2, 1, vec![0.0, 1.0]).unwrap();
        let out = mean_filter(&p, 51).unwrap();
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
