use crate::error::{Error, Result};

/// Single-channel image stored row-major.
///
/// Intensities are finite reals; every filter in this crate expects and
/// returns values in `[0, 1]`, except [`normalize_gaussian`] whose output is
/// deliberately unclamped.
///
/// [`normalize_gaussian`]: crate::imgproc::normalize_gaussian
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("pixel {i} is {}", data[i])));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    /// Builds a plane from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(width * height);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::InvalidDimensions(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(width, height, data)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }
}

/// Three co-registered planes of equal size.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    red: ImagePlane,
    green: ImagePlane,
    blue: ImagePlane,
}

impl RgbImage {
    pub fn new(red: ImagePlane, green: ImagePlane, blue: ImagePlane) -> Result<Self> {
        if red.dims() != green.dims() || red.dims() != blue.dims() {
            return Err(Error::DimensionMismatch(format!(
                "channel sizes differ: red {:?}, green {:?}, blue {:?}",
                red.dims(),
                green.dims(),
                blue.dims()
            )));
        }
        Ok(Self { red, green, blue })
    }

    /// Grayscale image replicated into all three channels.
    pub fn from_gray(plane: ImagePlane) -> Self {
        Self {
            red: plane.clone(),
            green: plane.clone(),
            blue: plane,
        }
    }

    pub fn width(&self) -> usize {
        self.red.width()
    }

    pub fn height(&self) -> usize {
        self.red.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.red.dims()
    }

    pub fn red(&self) -> &ImagePlane {
        &self.red
    }

    pub fn green(&self) -> &ImagePlane {
        &self.green
    }

    pub fn blue(&self) -> &ImagePlane {
        &self.blue
    }

    pub fn channels(&self) -> [&ImagePlane; 3] {
        [&self.red, &self.green, &self.blue]
    }

    pub fn into_channels(self) -> (ImagePlane, ImagePlane, ImagePlane) {
        (self.red, self.green, self.blue)
    }

    pub(crate) fn map_channels(&self, f: impl Fn(&ImagePlane) -> ImagePlane) -> Self {
        Self {
            red: f(&self.red),
            green: f(&self.green),
            blue: f(&self.blue),
        }
    }
}

pub fn split_channels(img: &RgbImage) -> (ImagePlane, ImagePlane, ImagePlane) {
    img.clone().into_channels()
}

pub fn merge_channels(red: ImagePlane, green: ImagePlane, blue: ImagePlane) -> Result<RgbImage> {
    RgbImage::new(red, green, blue)
}

pub fn invert_channel(p: &ImagePlane) -> ImagePlane {
    p.map(|v| 1.0 - v)
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{width}x{height} image has no pixels"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidDimensions(format!(
            "{width}x{height} image needs {} values, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

/// Maps any integer coordinate onto `0..n` by mirroring about the edges,
/// edge pixels repeated (`dcba|abcd|dcba`). Valid for offsets of any size.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_single_pixel() {
        let img = RgbImage::new(
            ImagePlane::filled(1, 1, 0.2).unwrap(),
            ImagePlane::filled(1, 1, 0.4).unwrap(),
            ImagePlane::filled(1, 1, 0.6).unwrap(),
        )
        .unwrap();
        let (r, g, b) = split_channels(&img);
        assert_eq!(r.data(), &[0.2]);
        assert_eq!(g.data(), &[0.4]);
        assert_eq!(b.data(), &[0.6]);
        assert_eq!(merge_channels(r, g, b).unwrap(), img);
    }

    #[test]
    fn gray_rgb_splits_into_identical_planes() {
        let p = ImagePlane::from_fn(3, 2, |r, c| (r * 3 + c) as f64 / 6.0).unwrap();
        let (r, g, b) = split_channels(&RgbImage::from_gray(p.clone()));
        assert_eq!(r, p);
        assert_eq!(g, p);
        assert_eq!(b, p);
    }

    #[test]
    fn mismatched_channels_rejected() {
        let a = ImagePlane::filled(2, 2, 0.0).unwrap();
        let b = ImagePlane::filled(2, 3, 0.0).unwrap();
        assert!(RgbImage::new(a.clone(), a, b).is_err());
    }

    #[test]
    fn invert_values() {
        let p = ImagePlane::new(3, 1, vec![0.0, 1.0, 0.25]).unwrap();
        assert_eq!(invert_channel(&p).data(), &[1.0, 0.0, 0.75]);
        let half = ImagePlane::filled(4, 4, 0.5).unwrap();
        assert_eq!(invert_channel(&half), half);
    }

    #[test]
    fn invalid_planes() {
        assert!(ImagePlane::new(0, 1, vec![]).is_err());
        assert!(ImagePlane::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImagePlane::new(1, 1, vec![f64::NAN]).is_err());
        assert!(ImagePlane::from_rows(&[vec![0.0, 1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert!((-10..10).all(|i| reflect_index(i, 1) == 0));
        // offsets much larger than the axis
        assert_eq!(reflect_index(-25, 3), reflect_index(-25 + 6 * 5, 3));
    }
}
