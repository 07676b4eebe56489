use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imgproc::clahe::{clahe, ClaheParams};
use crate::imgproc::filters::{check_odd, default_sigma, gaussian_filter, illumination_equalize};
use crate::imgproc::nlmd::{nlmd, NlmdParams};
use crate::imgproc::normalize::{normalize_gaussian, normalize_max};
use crate::imgproc::plane::{invert_channel, split_channels, ImagePlane, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Denoiser {
    Gaussian { sigma: f64, k: usize },
    Nlmd(NlmdParams),
}

impl Denoiser {
    pub fn gaussian(k: usize) -> Self {
        Denoiser::Gaussian {
            sigma: default_sigma(k),
            k,
        }
    }

    pub fn apply(&self, p: &ImagePlane) -> Result<ImagePlane> {
        match self {
            Denoiser::Gaussian { sigma, k } => gaussian_filter(p, *sigma, *k),
            Denoiser::Nlmd(params) => nlmd(p, params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    Max,
    GaussianIntensity,
}

impl Normalizer {
    pub fn apply(&self, p: &ImagePlane) -> Result<ImagePlane> {
        match self {
            Normalizer::Max => normalize_max(p),
            Normalizer::GaussianIntensity => normalize_gaussian(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Mean-filter window of the background estimate.
    pub mean_k: usize,
    pub clahe: ClaheParams,
    pub denoiser: Denoiser,
    pub normalizer: Normalizer,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            mean_k: 51,
            clahe: ClaheParams::default(),
            denoiser: Denoiser::gaussian(51),
            normalizer: Normalizer::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SplitChannels,
    InvertGreen,
    IlluminationEqualize,
    Clahe,
    GaussianFilter,
    Nlmd,
    NormalizeMax,
    NormalizeGaussian,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        check_odd(self.mean_k)?;
        self.clahe.validate()?;
        match self.denoiser {
            Denoiser::Gaussian { k, .. } => check_odd(k),
            Denoiser::Nlmd(params) => params.validate(),
        }
    }

    /// Stage order as executed by [`preprocess`].
    pub fn stages(&self) -> Vec<Stage> {
        vec![
            Stage::SplitChannels,
            Stage::InvertGreen,
            Stage::IlluminationEqualize,
            Stage::Clahe,
            match self.denoiser {
                Denoiser::Gaussian { .. } => Stage::GaussianFilter,
                Denoiser::Nlmd(_) => Stage::Nlmd,
            },
            match self.normalizer {
                Normalizer::Max => Stage::NormalizeMax,
                Normalizer::GaussianIntensity => Stage::NormalizeGaussian,
            },
        ]
    }
}

/// Inverted green channel, background flattening, CLAHE, denoising and
/// normalization, in that order.
pub fn preprocess(img: &RgbImage, cfg: &PreprocessConfig) -> Result<ImagePlane> {
    cfg.validate()?;
    let (_, green, _) = split_channels(img);
    let inverted = invert_channel(&green);
    let equalized = illumination_equalize(&inverted, cfg.mean_k)?;
    let enhanced = clahe(&equalized, &cfg.clahe)?;
    let denoised = cfg.denoiser.apply(&enhanced)?;
    cfg.normalizer.apply(&denoised)
}
