//! Non-local means denoising.
//!
//! Every output pixel is a weighted average over its search window, the
//! weight of a candidate being `exp(-d / h^2)` where `d` is the summed
//! squared difference between the patch around the pixel and the patch
//! around the candidate. The pixel itself takes part with weight 1. The
//! image is extended by reflection, so windows and patches near the border
//! read mirrored pixels.
//!
//! Instead of comparing patches pixel by pixel, the filter walks over the
//! window offsets: for one offset the squared difference image is computed
//! once and box-summed to get the patch distance of every pixel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::filters::separable_symmetric;
use crate::imgproc::plane::{reflect_index, ImagePlane};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlmdParams {
    pub search_radius: usize,
    pub patch_radius: usize,
    /// Filter strength, in intensity units.
    pub h: f64,
}

impl Default for NlmdParams {
    fn default() -> Self {
        Self {
            search_radius: 10,
            patch_radius: 3,
            h: 0.1,
        }
    }
}

impl NlmdParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_radius < self.patch_radius {
            return Err(Error::InvalidParameter(format!(
                "search radius {} is smaller than patch radius {}",
                self.search_radius, self.patch_radius
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "filter strength must be positive, got {}",
                self.h
            )));
        }
        Ok(())
    }
}

pub fn nlmd(p: &ImagePlane, params: &NlmdParams) -> Result<ImagePlane> {
    params.validate()?;
    let (w, h) = p.dims();
    let sr = params.search_radius as isize;
    let pr = params.patch_radius;
    let pad = sr as usize + pr;
    let inv_h2 = 1.0 / (params.h * params.h);

    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let mut padded = vec![0.0; pw * ph];
    for y in 0..ph {
        let sy = reflect_index(y as isize - pad as isize, h);
        for x in 0..pw {
            padded[y * pw + x] = p.get(sy, reflect_index(x as isize - pad as isize, w));
        }
    }

    // difference images cover every pixel plus a patch-radius margin
    let dw = w + 2 * pr;
    let dh = h + 2 * pr;
    let ones = vec![1.0; pr + 1];
    let mut diff = vec![0.0; dw * dh];
    let mut num = vec![0.0; w * h];
    let mut den = vec![0.0; w * h];

    for oy in -sr..=sr {
        for ox in -sr..=sr {
            // diff(y, x) compares padded(y + sr, x + sr) with its offset partner
            for y in 0..dh {
                let a = (y + sr as usize) * pw + sr as usize;
                let b = ((y as isize + sr + oy) as usize) * pw + (sr + ox) as usize;
                let row = &mut diff[y * dw..(y + 1) * dw];
                for (x, d) in row.iter_mut().enumerate() {
                    let delta = padded[a + x] - padded[b + x];
                    *d = delta * delta;
                }
            }
            let dist = separable_symmetric(&diff, dw, dh, &ones);
            for y in 0..h {
                let src = (y as isize + pad as isize + oy) as usize * pw;
                for x in 0..w {
                    let d = dist[(y + pr) * dw + x + pr];
                    let weight = (-d * inv_h2).exp();
                    let value = padded[src + (x as isize + pad as isize + ox) as usize];
                    num[y * w + x] += weight * value;
                    den[y * w + x] += weight;
                }
            }
        }
    }

    let data = num
        .iter()
        .zip(&den)
        .map(|(n, d)| (n / d).clamp(0.0, 1.0))
        .collect();
    Ok(ImagePlane::from_raw(w, h, data))
}
