//! Contrast limited adaptive histogram equalization.
//!
//! The plane is cut into a grid of tiles. Each tile gets its own clipped
//! histogram and cumulative mapping; pixels are remapped by bilinear
//! interpolation between the mappings of the four nearest tile centers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::plane::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheParams {
    /// Histogram ceiling as a multiple of the uniform bin height
    /// (`tile pixels / bins`). `f64::INFINITY` disables clipping.
    pub clip_limit: f64,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub bins: usize,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            clip_limit: 2.0,
            tile_rows: 8,
            tile_cols: 8,
            bins: 256,
        }
    }
}

impl ClaheParams {
    pub fn validate(&self) -> Result<()> {
        if self.clip_limit.is_nan() || self.clip_limit <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "clip limit must be positive, got {}",
                self.clip_limit
            )));
        }
        if self.tile_rows == 0 || self.tile_cols == 0 {
            return Err(Error::InvalidParameter("tile grid needs at least one tile".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 histogram bins, got {}",
                self.bins
            )));
        }
        Ok(())
    }
}

/// The clip step applied to every histogram bin: values above the limit are
/// cut down to it.
#[inline]
pub fn clip_to_limit(value: f64, limit: f64) -> f64 {
    if value > limit {
        limit
    } else {
        value
    }
}

/// Per-tile intensity mappings, indexed by histogram bin.
#[derive(Debug, Clone)]
pub struct TileMappings {
    bins: usize,
    row_bounds: Vec<usize>,
    col_bounds: Vec<usize>,
    luts: Vec<Vec<f64>>,
}

impl TileMappings {
    pub fn tile_rows(&self) -> usize {
        self.row_bounds.len() - 1
    }

    pub fn tile_cols(&self) -> usize {
        self.col_bounds.len() - 1
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Lookup table of tile `(row, col)`: output intensity per input bin.
    pub fn lut(&self, row: usize, col: usize) -> &[f64] {
        &self.luts[row * self.tile_cols() + col]
    }

    /// Pixel span `[start, end)` of tile row `row`.
    pub fn row_span(&self, row: usize) -> (usize, usize) {
        (self.row_bounds[row], self.row_bounds[row + 1])
    }

    pub fn col_span(&self, col: usize) -> (usize, usize) {
        (self.col_bounds[col], self.col_bounds[col + 1])
    }

    /// Maps value `v` as seen by the pixel at `(row, col)`.
    pub fn map(&self, row: usize, col: usize, v: f64) -> f64 {
        let b = bin_of(v, self.bins);
        let (r0, r1, ty) = locate(row, &self.row_bounds);
        let (c0, c1, tx) = locate(col, &self.col_bounds);
        let top = (1.0 - tx) * self.lut(r0, c0)[b] + tx * self.lut(r0, c1)[b];
        let bottom = (1.0 - tx) * self.lut(r1, c0)[b] + tx * self.lut(r1, c1)[b];
        ((1.0 - ty) * top + ty * bottom).clamp(0.0, 1.0)
    }
}

#[inline]
pub(crate) fn bin_of(v: f64, bins: usize) -> usize {
    let scaled = (v.clamp(0.0, 1.0) * bins as f64) as usize;
    scaled.min(bins - 1)
}

fn bounds(extent: usize, parts: usize) -> Vec<usize> {
    (0..=parts).map(|i| i * extent / parts).collect()
}

/// Neighboring tile indices and interpolation weight toward the second one.
fn locate(pos: usize, bounds: &[usize]) -> (usize, usize, f64) {
    let tiles = bounds.len() - 1;
    let center = |t: usize| (bounds[t] + bounds[t + 1]) as f64 / 2.0 - 0.5;
    let p = pos as f64;
    if tiles == 1 || p <= center(0) {
        return (0, 0, 0.0);
    }
    if p >= center(tiles - 1) {
        return (tiles - 1, tiles - 1, 0.0);
    }
    let mut t = 0;
    while center(t + 1) <= p {
        t += 1;
    }
    let (a, b) = (center(t), center(t + 1));
    (t, t + 1, (p - a) / (b - a))
}

pub fn clahe_mappings(p: &ImagePlane, params: &ClaheParams) -> Result<TileMappings> {
    params.validate()?;
    if params.tile_rows > p.height() || params.tile_cols > p.width() {
        return Err(Error::InvalidParameter(format!(
            "tile grid {}x{} is larger than the {}x{} image",
            params.tile_rows,
            params.tile_cols,
            p.height(),
            p.width()
        )));
    }
    let bins = params.bins;
    let row_bounds = bounds(p.height(), params.tile_rows);
    let col_bounds = bounds(p.width(), params.tile_cols);
    let mut luts = Vec::with_capacity(params.tile_rows * params.tile_cols);

    for tr in 0..params.tile_rows {
        for tc in 0..params.tile_cols {
            let mut hist = vec![0.0f64; bins];
            for r in row_bounds[tr]..row_bounds[tr + 1] {
                for c in col_bounds[tc]..col_bounds[tc + 1] {
                    hist[bin_of(p.get(r, c), bins)] += 1.0;
                }
            }
            let area = ((row_bounds[tr + 1] - row_bounds[tr])
                * (col_bounds[tc + 1] - col_bounds[tc])) as f64;

            let limit = (params.clip_limit * area / bins as f64).max(1.0);
            if limit.is_finite() {
                let mut excess = 0.0;
                for h in hist.iter_mut() {
                    let clipped = clip_to_limit(*h, limit);
                    excess += *h - clipped;
                    *h = clipped;
                }
                let share = excess / bins as f64;
                hist.iter_mut().for_each(|h| *h += share);
            }

            let mut acc = 0.0;
            let lut = hist
                .iter()
                .map(|h| {
                    acc += h;
                    (acc / area).min(1.0)
                })
                .collect();
            luts.push(lut);
        }
    }

    Ok(TileMappings {
        bins,
        row_bounds,
        col_bounds,
        luts,
    })
}

pub fn clahe(p: &ImagePlane, params: &ClaheParams) -> Result<ImagePlane> {
    let maps = clahe_mappings(p, params)?;
    let (w, h) = p.dims();
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            out.push(maps.map(r, c, p.get(r, c)));
        }
    }
    Ok(ImagePlane::from_raw(w, h, out))
}
