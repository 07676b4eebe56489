//! Lossless geometric augmentation of image/mask pairs.
//!
//! Each input pair yields six derivatives: clockwise rotations by 90, 180
//! and 270 degrees, a max-normalized copy of the image with the mask
//! untouched, and horizontal and vertical mirror images. Masks always go
//! through the same pixel permutation as their image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{normalize_max, ImagePlane, RgbImage};
use crate::metrics::BinaryMask;

/// A clockwise rotation by a multiple of 90 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuarterTurns {
    One = 1,
    Two = 2,
    Three = 3,
}

impl QuarterTurns {
    pub fn count(self) -> usize {
        self as usize
    }

    pub fn from_degrees(degrees: i64) -> Result<Self> {
        if degrees % 90 != 0 {
            return Err(Error::InvalidParameter(format!(
                "only multiples of 90 degrees are supported, got {degrees}"
            )));
        }
        Self::try_from(degrees.rem_euclid(360) / 90)
    }
}

impl TryFrom<i64> for QuarterTurns {
    type Error = Error;

    fn try_from(n: i64) -> Result<Self> {
        match n {
            1 => Ok(QuarterTurns::One),
            2 => Ok(QuarterTurns::Two),
            3 => Ok(QuarterTurns::Three),
            _ => Err(Error::InvalidParameter(format!(
                "quarter turns must be 1, 2 or 3, got {n}"
            ))),
        }
    }
}

/// Pixel-permuting transforms shared by images and masks.
pub trait Geometric: Sized {
    /// Clockwise; width and height swap for odd turn counts.
    fn rotate(&self, turns: QuarterTurns) -> Self;
    /// Reverses column order.
    fn flip_h(&self) -> Self;
    /// Reverses row order.
    fn flip_v(&self) -> Self;
    /// Crops the centered `fraction` of each side and resizes back to the
    /// original size with nearest-neighbor sampling.
    fn zoom_center(&self, fraction: f64) -> Self;
}

/// Rotates by `quarter_turns` clockwise quarter turns (1, 2 or 3).
pub fn rotate90<T: Geometric>(x: &T, quarter_turns: i64) -> Result<T> {
    Ok(x.rotate(QuarterTurns::try_from(quarter_turns)?))
}

pub fn flip_h<T: Geometric>(x: &T) -> T {
    x.flip_h()
}

pub fn flip_v<T: Geometric>(x: &T) -> T {
    x.flip_v()
}

fn rotate_cw<T: Copy>(width: usize, height: usize, data: &[T]) -> Vec<T> {
    // output is height wide and width tall: out[r][c] = in[height-1-c][r]
    let mut out = Vec::with_capacity(data.len());
    for r in 0..width {
        for c in 0..height {
            out.push(data[(height - 1 - c) * width + r]);
        }
    }
    out
}

fn rotate_grid<T: Copy>(width: usize, height: usize, data: &[T], turns: QuarterTurns) -> (usize, usize, Vec<T>) {
    let (mut w, mut h, mut buf) = (width, height, data.to_vec());
    for _ in 0..turns.count() {
        buf = rotate_cw(w, h, &buf);
        std::mem::swap(&mut w, &mut h);
    }
    (w, h, buf)
}

fn flip_cols<T: Copy>(width: usize, data: &[T]) -> Vec<T> {
    data.chunks_exact(width)
        .flat_map(|row| row.iter().rev().copied())
        .collect()
}

fn flip_rows<T: Copy>(width: usize, data: &[T]) -> Vec<T> {
    data.chunks_exact(width).rev().flatten().copied().collect()
}

fn zoom_grid<T: Copy>(width: usize, height: usize, data: &[T], fraction: f64) -> Vec<T> {
    let fraction = fraction.clamp(f64::MIN_POSITIVE, 1.0);
    let crop_w = ((width as f64 * fraction).round() as usize).clamp(1, width);
    let crop_h = ((height as f64 * fraction).round() as usize).clamp(1, height);
    let x0 = (width - crop_w) / 2;
    let y0 = (height - crop_h) / 2;
    let mut out = Vec::with_capacity(data.len());
    for r in 0..height {
        let sr = y0 + ((r as f64 + 0.5) * crop_h as f64 / height as f64) as usize;
        for c in 0..width {
            let sc = x0 + ((c as f64 + 0.5) * crop_w as f64 / width as f64) as usize;
            out.push(data[sr.min(y0 + crop_h - 1) * width + sc.min(x0 + crop_w - 1)]);
        }
    }
    out
}

impl Geometric for ImagePlane {
    fn rotate(&self, turns: QuarterTurns) -> Self {
        let (w, h, data) = rotate_grid(self.width(), self.height(), self.data(), turns);
        ImagePlane::from_raw(w, h, data)
    }

    fn flip_h(&self) -> Self {
        ImagePlane::from_raw(self.width(), self.height(), flip_cols(self.width(), self.data()))
    }

    fn flip_v(&self) -> Self {
        ImagePlane::from_raw(self.width(), self.height(), flip_rows(self.width(), self.data()))
    }

    fn zoom_center(&self, fraction: f64) -> Self {
        let data = zoom_grid(self.width(), self.height(), self.data(), fraction);
        ImagePlane::from_raw(self.width(), self.height(), data)
    }
}

impl Geometric for BinaryMask {
    fn rotate(&self, turns: QuarterTurns) -> Self {
        let (w, h, data) = rotate_grid(self.width(), self.height(), self.data(), turns);
        BinaryMask::from_raw(w, h, data)
    }

    fn flip_h(&self) -> Self {
        BinaryMask::from_raw(self.width(), self.height(), flip_cols(self.width(), self.data()))
    }

    fn flip_v(&self) -> Self {
        BinaryMask::from_raw(self.width(), self.height(), flip_rows(self.width(), self.data()))
    }

    fn zoom_center(&self, fraction: f64) -> Self {
        let data = zoom_grid(self.width(), self.height(), self.data(), fraction);
        BinaryMask::from_raw(self.width(), self.height(), data)
    }
}

impl Geometric for RgbImage {
    fn rotate(&self, turns: QuarterTurns) -> Self {
        self.map_channels(|p| p.rotate(turns))
    }

    fn flip_h(&self) -> Self {
        self.map_channels(Geometric::flip_h)
    }

    fn flip_v(&self) -> Self {
        self.map_channels(Geometric::flip_v)
    }

    fn zoom_center(&self, fraction: f64) -> Self {
        self.map_channels(|p| p.zoom_center(fraction))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleImage {
    Gray(ImagePlane),
    Rgb(RgbImage),
}

impl SampleImage {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            SampleImage::Gray(p) => p.dims(),
            SampleImage::Rgb(img) => img.dims(),
        }
    }

    /// Max-normalization; for color images all channels share the global
    /// maximum so hue is preserved.
    pub fn normalize_max(&self) -> Result<Self> {
        match self {
            SampleImage::Gray(p) => Ok(SampleImage::Gray(normalize_max(p)?)),
            SampleImage::Rgb(img) => {
                let max = img.channels().iter().map(|p| p.max()).fold(f64::NEG_INFINITY, f64::max);
                if max <= 0.0 {
                    return Err(Error::Degenerate(
                        "cannot max-normalize an all-black image".into(),
                    ));
                }
                Ok(SampleImage::Rgb(img.map_channels(|p| p.map(|v| v / max))))
            }
        }
    }
}

impl Geometric for SampleImage {
    fn rotate(&self, turns: QuarterTurns) -> Self {
        match self {
            SampleImage::Gray(p) => SampleImage::Gray(p.rotate(turns)),
            SampleImage::Rgb(img) => SampleImage::Rgb(img.rotate(turns)),
        }
    }

    fn flip_h(&self) -> Self {
        match self {
            SampleImage::Gray(p) => SampleImage::Gray(p.flip_h()),
            SampleImage::Rgb(img) => SampleImage::Rgb(img.flip_h()),
        }
    }

    fn flip_v(&self) -> Self {
        match self {
            SampleImage::Gray(p) => SampleImage::Gray(p.flip_v()),
            SampleImage::Rgb(img) => SampleImage::Rgb(img.flip_v()),
        }
    }

    fn zoom_center(&self, fraction: f64) -> Self {
        match self {
            SampleImage::Gray(p) => SampleImage::Gray(p.zoom_center(fraction)),
            SampleImage::Rgb(img) => SampleImage::Rgb(img.zoom_center(fraction)),
        }
    }
}

/// An image with its optional lesion mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    image: SampleImage,
    mask: Option<BinaryMask>,
}

impl SamplePair {
    pub fn new(image: SampleImage, mask: Option<BinaryMask>) -> Result<Self> {
        if let Some(m) = &mask {
            if m.dims() != image.dims() {
                return Err(Error::DimensionMismatch(format!(
                    "image is {:?} but mask is {:?}",
                    image.dims(),
                    m.dims()
                )));
            }
        }
        Ok(Self { image, mask })
    }

    pub fn gray(image: ImagePlane, mask: Option<BinaryMask>) -> Result<Self> {
        Self::new(SampleImage::Gray(image), mask)
    }

    pub fn rgb(image: RgbImage, mask: Option<BinaryMask>) -> Result<Self> {
        Self::new(SampleImage::Rgb(image), mask)
    }

    pub fn image(&self) -> &SampleImage {
        &self.image
    }

    pub fn mask(&self) -> Option<&BinaryMask> {
        self.mask.as_ref()
    }

    pub fn into_parts(self) -> (SampleImage, Option<BinaryMask>) {
        (self.image, self.mask)
    }

    fn transformed(&self, f: impl Fn(&SampleImage) -> SampleImage, g: impl Fn(&BinaryMask) -> BinaryMask) -> Self {
        Self {
            image: f(&self.image),
            mask: self.mask.as_ref().map(g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentTag {
    Rot90,
    Rot180,
    Rot270,
    Normalized,
    Hflip,
    Vflip,
    Zoom,
}

impl AugmentTag {
    pub const DEFAULT_SET: [AugmentTag; 6] = [
        AugmentTag::Rot90,
        AugmentTag::Rot180,
        AugmentTag::Rot270,
        AugmentTag::Normalized,
        AugmentTag::Hflip,
        AugmentTag::Vflip,
    ];

    /// File-name suffix used when derivatives are written to disk.
    pub fn suffix(&self) -> &'static str {
        match self {
            AugmentTag::Rot90 => "_r90",
            AugmentTag::Rot180 => "_r180",
            AugmentTag::Rot270 => "_r270",
            AugmentTag::Normalized => "_norm",
            AugmentTag::Hflip => "_hf",
            AugmentTag::Vflip => "_vf",
            AugmentTag::Zoom => "_zoom",
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AugmentTag::Rot90 => "rot90",
            AugmentTag::Rot180 => "rot180",
            AugmentTag::Rot270 => "rot270",
            AugmentTag::Normalized => "normalized",
            AugmentTag::Hflip => "hflip",
            AugmentTag::Vflip => "vflip",
            AugmentTag::Zoom => "zoom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub tag: AugmentTag,
    pub pair: SamplePair,
}

pub type AugmentSet = Vec<Augmented>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentOptions {
    /// Appends a center-crop zoom derivative. Off by default.
    pub zoom: bool,
}

pub const ZOOM_FRACTION: f64 = 0.9;

pub fn augment_pair(s: &SamplePair) -> Result<AugmentSet> {
    augment_pair_with(s, &AugmentOptions::default())
}

pub fn augment_pair_with(s: &SamplePair, opts: &AugmentOptions) -> Result<AugmentSet> {
    // re-check in case the pair was assembled from mismatched parts upstream
    let s = SamplePair::new(s.image.clone(), s.mask.clone())?;
    let mut out = Vec::with_capacity(7);
    for (tag, turns) in [
        (AugmentTag::Rot90, QuarterTurns::One),
        (AugmentTag::Rot180, QuarterTurns::Two),
        (AugmentTag::Rot270, QuarterTurns::Three),
    ] {
        out.push(Augmented {
            tag,
            pair: s.transformed(|i| i.rotate(turns), |m| m.rotate(turns)),
        });
    }
    out.push(Augmented {
        tag: AugmentTag::Normalized,
        pair: SamplePair {
            image: s.image.normalize_max()?,
            mask: s.mask.clone(),
        },
    });
    out.push(Augmented {
        tag: AugmentTag::Hflip,
        pair: s.transformed(Geometric::flip_h, Geometric::flip_h),
    });
    out.push(Augmented {
        tag: AugmentTag::Vflip,
        pair: s.transformed(Geometric::flip_v, Geometric::flip_v),
    });
    if opts.zoom {
        out.push(Augmented {
            tag: AugmentTag::Zoom,
            pair: s.transformed(|i| i.zoom_center(ZOOM_FRACTION), |m| m.zoom_center(ZOOM_FRACTION)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abcd() -> ImagePlane {
        ImagePlane::from_rows(&[[0.1, 0.2], [0.3, 0.4]]).unwrap()
    }

    #[test]
    fn one_turn_clockwise() {
        let out = rotate90(&abcd(), 1).unwrap();
        assert_eq!(out, ImagePlane::from_rows(&[[0.3, 0.1], [0.4, 0.2]]).unwrap());
    }

    #[test]
    fn rectangular_rotation_swaps_dims() {
        let p = ImagePlane::from_rows(&[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]).unwrap();
        let r = rotate90(&p, 1).unwrap();
        assert_eq!(r.dims(), (2, 3));
        assert_eq!(r, ImagePlane::from_rows(&[[0.4, 0.1], [0.5, 0.2], [0.6, 0.3]]).unwrap());
        assert_eq!(rotate90(&p, 2).unwrap().dims(), (3, 2));
    }

    #[test]
    fn four_turns_identity() {
        let p = ImagePlane::from_fn(5, 3, |r, c| (r * 5 + c) as f64 / 15.0).unwrap();
        let once = rotate90(&p, 1).unwrap();
        let back = rotate90(&rotate90(&rotate90(&once, 1).unwrap(), 1).unwrap(), 1).unwrap();
        assert_eq!(back, p);
        assert_eq!(rotate90(&p, 2).unwrap(), p.flip_h().flip_v());
        assert_eq!(rotate90(&p, 3).unwrap(), rotate90(&rotate90(&p, 2).unwrap(), 1).unwrap());
    }

    #[test]
    fn bad_turns_rejected() {
        assert!(rotate90(&abcd(), 0).is_err());
        assert!(rotate90(&abcd(), 4).is_err());
        assert!(QuarterTurns::from_degrees(45).is_err());
        assert_eq!(QuarterTurns::from_degrees(-90).unwrap(), QuarterTurns::Three);
        assert!(QuarterTurns::from_degrees(360).is_err());
    }

    #[test]
    fn flips() {
        let p = abcd();
        assert_eq!(flip_h(&p), ImagePlane::from_rows(&[[0.2, 0.1], [0.4, 0.3]]).unwrap());
        assert_eq!(flip_v(&p), ImagePlane::from_rows(&[[0.3, 0.4], [0.1, 0.2]]).unwrap());
        assert_eq!(flip_h(&flip_h(&p)), p);
        assert_eq!(flip_v(&flip_v(&p)), p);
    }

    #[test]
    fn flipped_mask_alignment() {
        let m = BinaryMask::from_fn(5, 3, |r, c| (r + 2 * c) % 3 == 0).unwrap();
        let f = m.flip_h();
        for r in 0..3 {
            for c in 0..5 {
                assert_eq!(f.get(r, c), m.get(r, 4 - c));
            }
        }
    }

    #[test]
    fn six_tagged_derivatives() {
        let img = ImagePlane::from_fn(4, 4, |r, c| (r * 4 + c) as f64 / 20.0).unwrap();
        let mask = BinaryMask::from_fn(4, 4, |r, c| r == 1 && c > 0).unwrap();
        let set = augment_pair(&SamplePair::gray(img, Some(mask.clone())).unwrap()).unwrap();
        let tags: Vec<AugmentTag> = set.iter().map(|a| a.tag).collect();
        assert_eq!(tags, AugmentTag::DEFAULT_SET);
        for a in &set {
            assert_eq!(a.pair.mask().unwrap().count(), mask.count());
        }
        assert_eq!(set[3].pair.mask(), Some(&mask));
    }

    #[test]
    fn empty_masks_stay_empty() {
        let img = ImagePlane::from_fn(3, 5, |r, c| (r + c) as f64 / 8.0).unwrap();
        let set = augment_pair(&SamplePair::gray(img, Some(BinaryMask::empty(3, 5).unwrap())).unwrap()).unwrap();
        assert!(set.iter().all(|a| a.pair.mask().unwrap().count() == 0));
    }

    #[test]
    fn mismatched_pair_rejected() {
        let img = ImagePlane::filled(4, 4, 0.5).unwrap();
        assert!(SamplePair::gray(img, Some(BinaryMask::empty(4, 3).unwrap())).is_err());
    }

    #[test]
    fn zoom_behind_flag() {
        let img = ImagePlane::from_fn(10, 10, |r, c| (r * 10 + c) as f64 / 100.0).unwrap();
        let mask = BinaryMask::from_fn(10, 10, |r, c| r == c).unwrap();
        let pair = SamplePair::gray(img, Some(mask)).unwrap();
        let set = augment_pair_with(&pair, &AugmentOptions { zoom: true }).unwrap();
        assert_eq!(set.len(), 7);
        let z = &set[6];
        assert_eq!(z.tag, AugmentTag::Zoom);
        assert_eq!(z.pair.image().dims(), (10, 10));
        // crop of 9 pixels starting at 0: the corner pixel survives
        if let SampleImage::Gray(p) = z.pair.image() {
            assert_eq!(p.get(0, 0), 0.0);
        }
    }
}
