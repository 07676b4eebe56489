use crate::error::{Error, Result};
use crate::harness::manifest::{ClassLabel, DatasetManifest};
use crate::imgproc::RgbImage;
use crate::io::{load_mask_resized, load_rgb_resized};
use crate::metrics::BinaryMask;

/// A decoded record.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: ClassLabel,
    pub image: RgbImage,
    pub mask: Option<BinaryMask>,
}

/// Decoded samples in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub source: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label.index()).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Downscale so the longer side is at most this many pixels.
    pub max_side: Option<u32>,
}

/// Decodes every image and mask of the manifest.
pub fn load_dataset(m: &DatasetManifest, opts: &LoadOptions) -> Result<Dataset> {
    let samples = m
        .records()
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let image = load_rgb_resized(&rec.image_path, opts.max_side)?;
            let mask = match &rec.mask_path {
                Some(p) => {
                    let mask = load_mask_resized(p, opts.max_side)?;
                    if mask.dims() != image.dims() {
                        return Err(Error::ManifestRow {
                            row: i + 1,
                            message: format!("mask is {:?} but image is {:?}", mask.dims(), image.dims()),
                        });
                    }
                    Some(mask)
                }
                None => None,
            };
            Ok(Sample {
                id: rec.image_path.display().to_string(),
                label: rec.label,
                image,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        samples,
        source: m.source.clone(),
    })
}
