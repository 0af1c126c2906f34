//! Disparity quality without ground truth: the left image is warped into the
//! right view with the disparity under test and compared with the real
//! right image on the pixels that received a value.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::adapt::{fill_holes, forward_warp, occlusion_mask, AdaptError};
use crate::model::{DisparityMap, Grid, Image};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("raster dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("no valid pixels to evaluate")]
    NoValidPixels,
    #[error("one image has no edge pixels")]
    EmptyEdgeSet,
    #[error(transparent)]
    Adapt(#[from] AdaptError),
}

fn same_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), MetricError> {
    if a != b {
        return Err(MetricError::DimensionMismatch { a, b });
    }
    Ok(())
}

pub const DEFAULT_MAX_VAL: f64 = 255.0;

/// Left image warped into the right view.
#[derive(Debug, Clone, PartialEq)]
pub struct Reprojection {
    /// Warped intensities, 0 where nothing landed.
    pub image: Image,
    /// True where a left pixel landed.
    pub valid: Grid<bool>,
}

/// Forward-warps `left` by `dmap`, skipping masked and occluded pixels.
pub fn photometric_reproject(left: &Image, dmap: &DisparityMap) -> Result<Reprojection, MetricError> {
    reproject_values(left, dmap.values())
}

/// Same as [`photometric_reproject`] on raw disparities: NaN marks a
/// missing value and zero is allowed.
pub fn reproject_values(left: &Image, disparity: &Grid<f64>) -> Result<Reprojection, MetricError> {
    same_dims(left.dims(), disparity.dims())?;
    let mask = occlusion_mask(disparity);
    let warp = forward_warp(left, disparity, &mask)?;
    Ok(Reprojection {
        image: warp.image,
        valid: warp.holes.map(|h| !h),
    })
}

pub fn mse(a: &Image, b: &Image, valid: &Grid<bool>) -> Result<f64, MetricError> {
    same_dims(a.dims(), b.dims())?;
    same_dims(a.dims(), valid.dims())?;
    let (mut sum, mut n) = (0.0, 0usize);
    for ((x, y), &ok) in a.pixels().iter().zip(b.pixels()).zip(valid.as_slice()) {
        if ok {
            sum += (x - y) * (x - y);
            n += 1;
        }
    }
    if n == 0 {
        return Err(MetricError::NoValidPixels);
    }
    Ok(sum / n as f64)
}

/// Infinite for identical images.
pub fn psnr_from_mse(mse: f64, max_val: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_val * max_val / mse).log10()
    }
}

pub fn psnr(a: &Image, b: &Image, valid: &Grid<bool>, max_val: f64) -> Result<f64, MetricError> {
    Ok(psnr_from_mse(mse(a, b, valid)?, max_val))
}

const SSIM_RADIUS: usize = 5;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_window() -> [[f64; 2 * SSIM_RADIUS + 1]; 2 * SSIM_RADIUS + 1] {
    let n = 2 * SSIM_RADIUS + 1;
    let mut w = [[0.0; 2 * SSIM_RADIUS + 1]; 2 * SSIM_RADIUS + 1];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - SSIM_RADIUS as f64, j as f64 - SSIM_RADIUS as f64);
            *x = (-(di * di + dj * dj) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            total += *x;
        }
    }
    debug_assert_eq!(w.len(), n);
    for row in w.iter_mut() {
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    w
}

/// Mean SSIM over 11x11 Gaussian windows (sigma 1.5, K1 0.01, K2 0.03,
/// range 255) that lie inside the image and are centred on a valid pixel.
pub fn ssim(a: &Image, b: &Image, valid: &Grid<bool>) -> Result<f64, MetricError> {
    same_dims(a.dims(), b.dims())?;
    same_dims(a.dims(), valid.dims())?;
    let (w, h) = a.dims();
    let r = SSIM_RADIUS;
    if w < 2 * r + 1 || h < 2 * r + 1 {
        return Err(MetricError::NoValidPixels);
    }
    let kernel = gaussian_window();
    let c1 = (0.01 * DEFAULT_MAX_VAL).powi(2);
    let c2 = (0.03 * DEFAULT_MAX_VAL).powi(2);
    let rows: Vec<(f64, usize)> = (r..h - r)
        .into_par_iter()
        .map(|v| {
            let (mut sum, mut n) = (0.0, 0);
            for u in r..w - r {
                if !*valid.get(u, v) {
                    continue;
                }
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for (i, krow) in kernel.iter().enumerate() {
                    let y = v + i - r;
                    for (j, &k) in krow.iter().enumerate() {
                        let x = u + j - r;
                        let (pa, pb) = (a.at(x, y), b.at(x, y));
                        ma += k * pa;
                        mb += k * pb;
                        saa += k * pa * pa;
                        sbb += k * pb * pb;
                        sab += k * (pa * pb);
                    }
                }
                let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                sum += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                n += 1;
            }
            (sum, n)
        })
        .collect();
    let (sum, n) = rows.iter().fold((0.0, 0), |acc, r| (acc.0 + r.0, acc.1 + r.1));
    if n == 0 {
        return Err(MetricError::NoValidPixels);
    }
    Ok(sum / n as f64)
}

/// Sobel gradient magnitude with replicated borders.
pub fn sobel_magnitude(image: &Image) -> Grid<f64> {
    let (w, h) = image.dims();
    let at = |u: isize, v: isize| image.at(u.clamp(0, w as isize - 1) as usize, v.clamp(0, h as isize - 1) as usize);
    Grid::from_fn(w, h, |u, v| {
        let (u, v) = (u as isize, v as isize);
        let gx = at(u + 1, v - 1) + 2.0 * at(u + 1, v) + at(u + 1, v + 1)
            - at(u - 1, v - 1)
            - 2.0 * at(u - 1, v)
            - at(u - 1, v + 1);
        let gy = at(u - 1, v + 1) + 2.0 * at(u, v + 1) + at(u + 1, v + 1)
            - at(u - 1, v - 1)
            - 2.0 * at(u, v - 1)
            - at(u + 1, v - 1);
        (gx * gx + gy * gy).sqrt()
    })
}

/// Valid pixels whose gradient magnitude exceeds the mean plus two standard
/// deviations of the magnitude over the valid pixels.
pub fn edge_map(image: &Image, valid: &Grid<bool>) -> Result<Grid<bool>, MetricError> {
    same_dims(image.dims(), valid.dims())?;
    let mag = sobel_magnitude(image);
    let picked: Vec<f64> = mag
        .as_slice()
        .iter()
        .zip(valid.as_slice())
        .filter(|(_, &ok)| ok)
        .map(|(&m, _)| m)
        .collect();
    if picked.is_empty() {
        return Err(MetricError::NoValidPixels);
    }
    let n = picked.len() as f64;
    let mean = picked.iter().sum::<f64>() / n;
    let std = (picked.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n).sqrt();
    let threshold = mean + 2.0 * std;
    let mut out = mag.map(|&m| m > threshold);
    for (e, &ok) in out.as_mut_slice().iter_mut().zip(valid.as_slice()) {
        *e &= ok;
    }
    Ok(out)
}

/// Exact squared Euclidean distance to the nearest set pixel (infinite when
/// the set is empty).
pub fn squared_distance_transform(set: &Grid<bool>) -> Grid<f64> {
    let (w, h) = set.dims();
    let mut cols = Grid::from_fn(w, h, |u, v| if *set.get(u, v) { 0.0 } else { f64::INFINITY });
    let mut buf = vec![0.0; w.max(h)];
    for u in 0..w {
        let f: Vec<f64> = (0..h).map(|v| *cols.get(u, v)).collect();
        distance_1d(&f, &mut buf[..h]);
        for v in 0..h {
            *cols.get_mut(u, v) = buf[v];
        }
    }
    for v in 0..h {
        let f = cols.row(v).to_vec();
        distance_1d(&f, &mut buf[..w]);
        for u in 0..w {
            *cols.get_mut(u, v) = buf[u];
        }
    }
    cols
}

/// Lower envelope of parabolas (Felzenszwalb and Huttenlocher).
fn distance_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut v: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let cross = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for &q in &sites {
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = cross(q, p);
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *slot = d * d + f[v[k]];
    }
}

/// Mean over the pixels of `from` of the distance to the nearest pixel of
/// `to`, in raster order.
pub fn directed_modified_hausdorff(from: &Grid<bool>, to: &Grid<bool>) -> Result<f64, MetricError> {
    same_dims(from.dims(), to.dims())?;
    let dt = squared_distance_transform(to);
    let (mut sum, mut n) = (0.0, 0usize);
    for (&inside, &d2) in from.as_slice().iter().zip(dt.as_slice()) {
        if inside {
            sum += d2.sqrt();
            n += 1;
        }
    }
    if n == 0 || !to.as_slice().contains(&true) {
        return Err(MetricError::EmptyEdgeSet);
    }
    Ok(sum / n as f64)
}

/// Larger of the two directed distances. Two empty sets are at distance 0.
pub fn modified_hausdorff(a: &Grid<bool>, b: &Grid<bool>) -> Result<f64, MetricError> {
    same_dims(a.dims(), b.dims())?;
    let (ea, eb) = (a.as_slice().contains(&true), b.as_slice().contains(&true));
    if !ea && !eb {
        return Ok(0.0);
    }
    Ok(directed_modified_hausdorff(a, b)?.max(directed_modified_hausdorff(b, a)?))
}

/// Modified Hausdorff distance between the edge maps of two images.
pub fn hausdorff(a: &Image, b: &Image, valid: &Grid<bool>) -> Result<f64, MetricError> {
    same_dims(a.dims(), b.dims())?;
    modified_hausdorff(&edge_map(a, valid)?, &edge_map(b, valid)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ssim: f64,
    /// Infinite (`"inf"` in JSON) when the images agree exactly.
    #[serde(with = "inf_sentinel")]
    pub psnr: f64,
    pub mse: f64,
    pub hd: f64,
    pub evaluated_pixel_count: usize,
    pub occluded_excluded: bool,
}

mod inf_sentinel {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *x == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// Warps `left` into the right view by `dmap` and scores it against
/// `right` on the pixels that received a value. MSE and PSNR use those
/// pixels only; holes are filled from `right` before SSIM windows and edge
/// gradients are computed, and only valid pixels are scored.
pub fn evaluate_disparity(left: &Image, right: &Image, dmap: &DisparityMap) -> Result<MetricReport, MetricError> {
    evaluate_values(left, right, dmap.values())
}

/// [`evaluate_disparity`] on raw disparities (NaN = missing, zero allowed).
pub fn evaluate_values(left: &Image, right: &Image, disparity: &Grid<f64>) -> Result<MetricReport, MetricError> {
    same_dims(left.dims(), right.dims())?;
    let rep = reproject_values(left, disparity)?;
    let holes = rep.valid.map(|v| !v);
    let filled = fill_holes(&rep.image, &holes, right)?;
    let mse = mse(&filled, right, &rep.valid)?;
    Ok(MetricReport {
        ssim: ssim(&filled, right, &rep.valid)?,
        psnr: psnr_from_mse(mse, DEFAULT_MAX_VAL),
        mse,
        hd: hausdorff(&filled, right, &rep.valid)?,
        evaluated_pixel_count: rep.valid.as_slice().iter().filter(|&&v| v).count(),
        occluded_excluded: true,
    })
}

/// Mean of each field over the reports, skipping non-finite values.
pub fn aggregate_reports(reports: &[MetricReport]) -> Option<MetricReport> {
    if reports.is_empty() {
        return None;
    }
    let mean = |f: fn(&MetricReport) -> f64| {
        let finite: Vec<f64> = reports.iter().map(f).filter(|x| x.is_finite()).collect();
        if finite.is_empty() {
            f(&reports[0])
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    };
    Some(MetricReport {
        ssim: mean(|r| r.ssim),
        psnr: mean(|r| r.psnr),
        mse: mean(|r| r.mse),
        hd: mean(|r| r.hd),
        evaluated_pixel_count: reports.iter().map(|r| r.evaluated_pixel_count).sum(),
        occluded_excluded: reports.iter().all(|r| r.occluded_excluded),
    })
}
