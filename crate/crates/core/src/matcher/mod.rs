//! Census + semi-global matching, and ingestion of disparities produced by
//! external (learned) matchers.
//!
//! All costs are integers, so aggregation is exact and the result does not
//! depend on how rayon splits the work.

mod census;
mod refine;
mod sgm;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{read_pfm, FormatError};
use crate::model::{DisparityMap, Grid, Image, ModelError};

pub use census::{census_cost_volume, census_transform};
pub use refine::refine_disparity;
pub use sgm::sgm_aggregate;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("image dimensions differ: left {left:?}, right {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid match parameters: {0}")]
    InvalidParams(String),
    #[error("every disparity is masked")]
    AllMasked,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    pub d_min: usize,
    pub d_max: usize,
    pub census_window: usize,
    pub p1: u32,
    pub p2: u32,
    /// 4 or 8 aggregation directions.
    pub paths: usize,
    pub lr_threshold: f64,
    pub subpixel: bool,
    /// Half-size of the intensity window used to polish subpixel
    /// disparities; 0 keeps the parabola estimate.
    #[serde(default = "default_refine_radius")]
    pub refine_radius: usize,
}

fn default_refine_radius() -> usize {
    3
}

impl MatchParams {
    /// Defaults for the search range `[d_min, d_max]`: 5x5 census, 8 paths,
    /// 1 px left-right tolerance, subpixel on.
    pub fn new(d_min: usize, d_max: usize) -> Self {
        let census_window = 5;
        let (p1, p2) = Self::scaled_penalties(census_window);
        Self {
            d_min,
            d_max,
            census_window,
            p1,
            p2,
            paths: 8,
            lr_threshold: 1.0,
            subpixel: true,
            refine_radius: default_refine_radius(),
        }
    }

    /// Penalties 8 and 96 for a 64-bit census signature, scaled to the
    /// number of bits the window produces.
    pub fn scaled_penalties(census_window: usize) -> (u32, u32) {
        let bits = (census_window * census_window).saturating_sub(1) as f64;
        let p1 = (8.0 * bits / 64.0).round().max(1.0) as u32;
        let p2 = (96.0 * bits / 64.0).round().max(p1 as f64) as u32;
        (p1, p2)
    }

    /// Changes the census window and rescales the penalties with it.
    pub fn with_census_window(mut self, census_window: usize) -> Self {
        self.census_window = census_window;
        (self.p1, self.p2) = Self::scaled_penalties(census_window);
        self
    }

    pub fn ndisp(&self) -> usize {
        self.d_max - self.d_min + 1
    }

    pub fn census_bits(&self) -> u32 {
        (self.census_window * self.census_window - 1) as u32
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        let fail = |m: &str| Err(MatchError::InvalidParams(m.into()));
        if self.d_min >= self.d_max {
            return fail("need d_min < d_max");
        }
        if self.census_window < 3 || self.census_window % 2 == 0 || self.census_window > 11 {
            return fail("census window must be odd and within 3..=11");
        }
        if self.p1 == 0 || self.p1 > self.p2 {
            return fail("need 0 < P1 <= P2");
        }
        if self.paths != 4 && self.paths != 8 {
            return fail("paths must be 4 or 8");
        }
        if self.refine_radius > 10 {
            return fail("refine radius must be <= 10");
        }
        if !(self.lr_threshold >= 0.0) {
            return fail("lr_threshold must be >= 0");
        }
        Ok(())
    }
}

/// Per-pixel costs over the disparity range, stored `[v][u][d - d_min]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    width: usize,
    height: usize,
    d_min: usize,
    ndisp: usize,
    data: Vec<T>,
    /// False where every in-range cost is the same (no texture to match) or
    /// no candidate lies inside the right image.
    informative: Vec<bool>,
}

pub type CostVolume = Volume<u16>;
pub type AggregatedVolume = Volume<u32>;

impl<T: Copy> Volume<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    pub fn ndisp(&self) -> usize {
        self.ndisp
    }

    /// Cost at pixel `(u, v)` and absolute disparity `d`.
    pub fn at(&self, u: usize, v: usize, d: usize) -> T {
        self.data[(v * self.width + u) * self.ndisp + d - self.d_min]
    }

    /// Costs of one pixel over the whole range.
    pub fn curve(&self, u: usize, v: usize) -> &[T] {
        let start = (v * self.width + u) * self.ndisp;
        &self.data[start..start + self.ndisp]
    }

    pub fn informative(&self, u: usize, v: usize) -> bool {
        self.informative[v * self.width + u]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Winner-take-all over an aggregated volume. Ties go to the smaller
/// disparity; with `subpixel` a parabola through the neighbouring costs
/// refines the minimum by at most half a pixel. Uninformative pixels and
/// non-positive results are masked.
pub fn wta_disparity(aggregated: &AggregatedVolume, params: &MatchParams) -> DisparityMap {
    DisparityMap::from_values_filtered(wta_raw(aggregated, params.subpixel), |d| d > 0.0)
}

fn wta_raw(agg: &AggregatedVolume, subpixel: bool) -> Grid<f64> {
    let (w, h, n) = (agg.width, agg.height, agg.ndisp);
    let mut out = vec![f64::NAN; w * h];
    for (p, slot) in out.iter_mut().enumerate() {
        if !agg.informative[p] {
            continue;
        }
        let curve = &agg.data[p * n..(p + 1) * n];
        let mut best = 0;
        for (k, &c) in curve.iter().enumerate() {
            if c < curve[best] {
                best = k;
            }
        }
        let mut d = (agg.d_min + best) as f64;
        if subpixel && best > 0 && best + 1 < n {
            let (a, b, c) = (curve[best - 1] as f64, curve[best] as f64, curve[best + 1] as f64);
            let denom = a - 2.0 * b + c;
            if denom > 0.0 {
                d += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
            }
        }
        *slot = d;
    }
    Grid::from_vec(w, h, out).expect("dimensions match")
}

/// Masks left disparities that the right-referenced map doesn't confirm
/// within `threshold` pixels.
pub fn left_right_check(left: &Grid<f64>, right: &Grid<f64>, threshold: f64) -> Grid<f64> {
    let w = left.width();
    Grid::from_fn(w, left.height(), |u, v| {
        let d = *left.get(u, v);
        if !d.is_finite() {
            return f64::NAN;
        }
        let ur = (u as f64 - d).round();
        if ur < 0.0 || ur >= w as f64 {
            return f64::NAN;
        }
        let dr = *right.get(ur as usize, v);
        if dr.is_finite() && (d - dr).abs() <= threshold {
            d
        } else {
            f64::NAN
        }
    })
}

/// Left-referenced raw disparity (NaN where undecided) for one direction.
fn match_one_way(left: &Image, right: &Image, params: &MatchParams) -> Result<Grid<f64>, MatchError> {
    let cost = census_cost_volume(left, right, params)?;
    let agg = sgm_aggregate(&cost, params);
    drop(cost);
    let raw = wta_raw(&agg, params.subpixel);
    Ok(if params.subpixel && params.refine_radius > 0 {
        refine_disparity(left, right, &raw, params.refine_radius)
    } else {
        raw
    })
}

/// Full matcher: census cost, SGM aggregation, winner-take-all with
/// parabola subpixel fit, intensity refinement, and a left-right
/// consistency check. The
/// right-referenced map comes from matching the mirrored, swapped pair.
pub fn match_pair(left: &Image, right: &Image, params: &MatchParams) -> Result<DisparityMap, MatchError> {
    params.validate()?;
    check_dims(left, right)?;
    let d_left = match_one_way(left, right, params)?;
    let d_right = match_one_way(&right.mirrored(), &left.mirrored(), params)?.mirrored();
    let checked = left_right_check(&d_left, &d_right, params.lr_threshold);
    Ok(DisparityMap::from_values_filtered(checked, |d| d > 0.0))
}

fn check_dims(left: &Image, right: &Image) -> Result<(), MatchError> {
    if left.dims() != right.dims() {
        return Err(MatchError::DimensionMismatch {
            left: left.dims(),
            right: right.dims(),
        });
    }
    Ok(())
}

/// Reads a PFM disparity from an external matcher. Non-finite values and
/// values outside `[d_min, d_max]` are masked.
pub fn ingest_external_disparity(
    path: &Path,
    expected_dims: (usize, usize),
    params: &MatchParams,
) -> Result<DisparityMap, MatchError> {
    let grid = read_pfm(path)?;
    if grid.dims() != expected_dims {
        return Err(MatchError::DimensionMismatch {
            left: expected_dims,
            right: grid.dims(),
        });
    }
    let (lo, hi) = (params.d_min as f64, params.d_max as f64);
    let values = grid.map(|&x| x as f64);
    let dmap = DisparityMap::from_values_filtered(values, |d| d.is_finite() && d > 0.0 && d >= lo && d <= hi);
    if dmap.valid_count() == 0 {
        return Err(MatchError::AllMasked);
    }
    Ok(dmap)
}

#[cfg(test)]
mod tests;
