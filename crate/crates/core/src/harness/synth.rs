//! Seeded bright-disk images on a dark fundus-like background.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::dataset::{Dataset, Sample};
use crate::harness::manifest::{ClassLabel, DatasetManifest, LesionType, ManifestMode, ManifestRecord};
use crate::imgproc::{ImagePlane, RgbImage};
use crate::io::{save_mask, save_rgb};
use crate::metrics::BinaryMask;
use crate::rng::{rng_for, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub count: usize,
    pub size: usize,
    /// Share of records without a lesion, labelled healthy.
    pub healthy_fraction: f64,
    /// Standard deviation of the additive pixel noise.
    pub noise: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 200,
            size: 64,
            healthy_fraction: 0.0,
            noise: 0.04,
            min_radius: 6.0,
            max_radius: 14.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let problem = if self.count == 0 {
            "count must be positive"
        } else if self.size < 8 {
            "size must be at least 8"
        } else if !(0.0..=1.0).contains(&self.healthy_fraction) {
            "healthy fraction must lie in [0, 1]"
        } else if !(self.noise.is_finite() && self.noise >= 0.0) {
            "noise must be finite and non-negative"
        } else if !(self.min_radius > 0.0 && self.min_radius <= self.max_radius) {
            "radii must satisfy 0 < min <= max"
        } else if 2.0 * self.max_radius + 2.0 > self.size as f64 {
            "disks of the maximum radius do not fit the image size"
        } else {
            return Ok(());
        };
        Err(Error::InvalidParameter(format!("synthetic dataset: {problem}")))
    }

    pub fn healthy_count(&self) -> usize {
        (self.healthy_fraction * self.count as f64).round() as usize
    }
}

const BACKGROUND: [f64; 3] = [0.50, 0.22, 0.10];
const LESION_GAIN: [f64; 3] = [0.35, 0.45, 0.30];

fn synth_one(cfg: &SynthConfig, index: usize) -> Sample {
    let mut rng = rng_for(cfg.seed, streams::SYNTH, index as u64);
    let n = cfg.size;
    let healthy = index < cfg.healthy_count();
    let radius = rng.random_range(cfg.min_radius..=cfg.max_radius);
    let lo = radius + 1.0;
    let hi = n as f64 - 1.0 - radius - 1.0;
    let cy = rng.random_range(lo..=hi);
    let cx = rng.random_range(lo..=hi);
    let noise = Normal::new(0.0, cfg.noise.max(f64::MIN_POSITIVE)).expect("valid normal");

    let mask = BinaryMask::from_fn(n, n, |r, c| {
        let (dy, dx) = (r as f64 - cy, c as f64 - cx);
        !healthy && dy * dy + dx * dx <= radius * radius
    })
    .expect("nonzero size");

    let centre = (n as f64 - 1.0) / 2.0;
    let mut channels = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    for r in 0..n {
        for c in 0..n {
            let (dy, dx) = ((r as f64 - centre) / centre, (c as f64 - centre) / centre);
            let vignette = 1.0 - 0.3 * (dy * dy + dx * dx).min(1.0);
            let lesion = mask.get(r, c);
            for (ch, plane) in channels.iter_mut().enumerate() {
                let mut v = BACKGROUND[ch] * vignette;
                if lesion {
                    v += LESION_GAIN[ch];
                }
                if cfg.noise > 0.0 {
                    v += noise.sample(&mut rng);
                }
                plane[r * n + c] = v.clamp(0.0, 1.0);
            }
        }
    }
    let [red, green, blue] = channels.map(|d| ImagePlane::new(n, n, d).expect("finite"));
    Sample {
        id: format!("synth_{index:04}"),
        label: if healthy { ClassLabel::Healthy } else { ClassLabel::Diseased },
        image: RgbImage::new(red, green, blue).expect("equal dims"),
        mask: (!healthy).then_some(mask),
    }
}

/// In-memory synthetic dataset; healthy records come first.
pub fn synth_disks(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    Ok(Dataset {
        samples: (0..cfg.count).map(|i| synth_one(cfg, i)).collect(),
        source: format!("synthetic disks (seed {})", cfg.seed),
    })
}

/// Writes `images/`, `masks/` and `manifest.csv` under `dir` and returns the
/// manifest path.
pub fn write_synth_dataset(cfg: &SynthConfig, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let data = synth_disks(cfg)?;
    let mut records = Vec::with_capacity(data.len());
    for s in &data.samples {
        let image_path = dir.join("images").join(format!("{}.png", s.id));
        save_rgb(&s.image, &image_path)?;
        let mask_path = match &s.mask {
            Some(m) => {
                let p = dir.join("masks").join(format!("{}_mask.png", s.id));
                save_mask(m, &p)?;
                Some(p)
            }
            None => None,
        };
        records.push(ManifestRecord {
            image_path,
            label: s.label,
            lesion_type: match s.label {
                ClassLabel::Healthy => LesionType::None,
                ClassLabel::Diseased => LesionType::Active,
            },
            mask_path,
        });
    }
    let manifest_path = dir.join("manifest.csv");
    let manifest = DatasetManifest::new(records, manifest_path.display().to_string(), ManifestMode::Segmentation)?;
    manifest.write_csv(&manifest_path)?;
    Ok(manifest_path)
}
