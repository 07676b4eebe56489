use crate::error::{Error, Result};
use crate::imgproc::plane::ImagePlane;

/// Divides by the global maximum so the brightest pixel becomes 1.
pub fn normalize_max(p: &ImagePlane) -> Result<ImagePlane> {
    let max = p.max();
    if max <= 0.0 {
        return Err(Error::Degenerate(
            "cannot max-normalize a plane without positive pixels".into(),
        ));
    }
    Ok(p.map(|v| v / max))
}

/// Zero mean, unit population standard deviation. The result is not
/// clamped and generally leaves `[0, 1]`.
pub fn normalize_gaussian(p: &ImagePlane) -> Result<ImagePlane> {
    if p.min() == p.max() {
        return Err(Error::Degenerate(
            "cannot standardize a constant plane".into(),
        ));
    }
    let mean = p.mean();
    let var = p.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / p.len() as f64;
    let std = var.sqrt();
    Ok(p.map(|v| (v - mean) / std))
}
