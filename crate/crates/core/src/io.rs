//! 8-bit image files in and out. Intensities are decoded as `v / 255` and
//! quantized back with `round(x * 255)`.

use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::imgproc::{ImagePlane, RgbImage};
use crate::metrics::BinaryMask;

fn open(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Downscales so the longer side is at most `max_side` (aspect kept).
fn shrink(img: image::DynamicImage, max_side: Option<u32>, filter: image::imageops::FilterType) -> image::DynamicImage {
    match max_side {
        Some(side) if img.width().max(img.height()) > side => {
            let scale = side as f64 / img.width().max(img.height()) as f64;
            let w = ((img.width() as f64 * scale).round() as u32).max(1);
            let h = ((img.height() as f64 * scale).round() as u32).max(1);
            img.resize_exact(w, h, filter)
        }
        _ => img,
    }
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    load_rgb_resized(path, None)
}

pub fn load_rgb_resized(path: impl AsRef<Path>, max_side: Option<u32>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = shrink(open(path)?, max_side, image::imageops::FilterType::Triangle).to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut planes = [Vec::with_capacity(w * h), Vec::with_capacity(w * h), Vec::with_capacity(w * h)];
    for px in img.pixels() {
        for (plane, &v) in planes.iter_mut().zip(px.0.iter()) {
            plane.push(v as f64 / 255.0);
        }
    }
    let [r, g, b] = planes;
    RgbImage::new(
        ImagePlane::new(w, h, r)?,
        ImagePlane::new(w, h, g)?,
        ImagePlane::new(w, h, b)?,
    )
}

/// Any nonzero sample marks a lesion pixel.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    load_mask_resized(path, None)
}

pub fn load_mask_resized(path: impl AsRef<Path>, max_side: Option<u32>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = shrink(open(path)?, max_side, image::imageops::FilterType::Nearest).to_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    BinaryMask::new(w, h, img.pixels().map(|p| p.0[0] != 0).collect())
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn save(buf: impl FnOnce(&Path) -> image::ImageResult<()>, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    buf(path).map_err(|source| match source {
        image::ImageError::IoError(e) => Error::io(path, e),
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    })
}

pub fn save_plane(plane: &ImagePlane, path: impl AsRef<Path>) -> Result<()> {
    let img: GrayImage = ImageBuffer::from_fn(plane.width() as u32, plane.height() as u32, |x, y| {
        Luma([quantize(plane.get(y as usize, x as usize))])
    });
    save(|p| img.save(p), path.as_ref())
}

pub fn save_rgb(rgb: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let img: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_fn(rgb.width() as u32, rgb.height() as u32, |x, y| {
            let (r, c) = (y as usize, x as usize);
            Rgb([
                quantize(rgb.red().get(r, c)),
                quantize(rgb.green().get(r, c)),
                quantize(rgb.blue().get(r, c)),
            ])
        });
    save(|p| img.save(p), path.as_ref())
}

/// Writes 0 for background and 255 for lesion.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let img: GrayImage = ImageBuffer::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(y as usize, x as usize) { 255 } else { 0 }])
    });
    save(|p| img.save(p), path.as_ref())
}
