//! Channel operations, reflect-padded spatial filters, CLAHE, normalization
//! and the fundus preprocessing pipeline.

mod clahe;
mod filters;
mod nlmd;
mod normalize;
mod pipeline;
mod plane;

pub use clahe::{clahe, clahe_mappings, clip_to_limit, ClaheParams, TileMappings};
pub use filters::{
    default_sigma, gaussian_filter, gaussian_kernel, illumination_equalize, mean_filter, Kernel,
};
pub use nlmd::{nlmd, NlmdParams};
pub use normalize::{normalize_gaussian, normalize_max};
pub use pipeline::{preprocess, Denoiser, Normalizer, PreprocessConfig, Stage};
pub use plane::{invert_channel, merge_channels, split_channels, ImagePlane, RgbImage};

pub(crate) use filters::box_mean;
pub(crate) use plane::reflect_index;
