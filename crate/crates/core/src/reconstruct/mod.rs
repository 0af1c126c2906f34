//! From disparity to metrology: point clouds, the still-water plane and the
//! world frame it defines, deviation maps, and probe time series.

mod waves;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{camera_to_world, triangulate};
use crate::model::{DisparityMap, Frame, Grid, Image, ModelError, Plane, PointCloud, StereoRig};

pub use waves::{
    align_by_cross_correlation, extract_probe_series, linear_fit_bias, r_squared, zero_crossing_stats, LinearFit,
    ProbeExtraction, WaveStats,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("need at least 3 points, found {found}")]
    TooFewPoints { found: usize },
    #[error("best consensus holds {fraction:.3} of the points, below the required {required}")]
    ConsensusFailure { fraction: f64, required: f64 },
    #[error("plane normal is perpendicular to the optical axis")]
    DegenerateOrientation,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no points near the probe from frame {frame} for {run} consecutive frames")]
    ProbeStarved { frame: usize, run: usize },
    #[error("found {found} up-crossings, need at least 2")]
    TooFewCrossings { found: usize },
    #[error("reference series has zero variance")]
    ZeroVariance,
    #[error("reference samples have no spread")]
    DegenerateSpread,
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("expected a {expected}-frame cloud, got {found}")]
    FrameMismatch { expected: Frame, found: Frame },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One point per valid disparity, in the left camera frame or mapped to the
/// world through the rig pose. Intensities come from `image`.
pub fn disparity_to_cloud(dmap: &DisparityMap, image: &Image, rig: &StereoRig, frame: Frame) -> PointCloud {
    let (w, h) = dmap.dims();
    let rows: Vec<Vec<(Vector3<f64>, f64)>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .filter_map(|u| {
                    let d = dmap.get(u, v)?;
                    let p = triangulate(u as f64, v as f64, d, rig).ok()?;
                    let p = match frame {
                        Frame::Camera => p,
                        Frame::World => camera_to_world(&p, rig),
                    };
                    Some((p, image.at(u, v)))
                })
                .collect()
        })
        .collect();
    let (points, intensity): (Vec<_>, Vec<_>) = rows.into_iter().flatten().unzip();
    PointCloud::new(points, intensity, frame).expect("triangulated points are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacParams {
    /// Maximum orthogonal distance of an inlier, m.
    pub inlier_threshold: f64,
    pub iterations: usize,
    pub min_inlier_fraction: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            inlier_threshold: 0.002,
            iterations: 500,
            min_inlier_fraction: 0.5,
            seed: 0,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<(), ReconstructError> {
        if !(self.inlier_threshold.is_finite() && self.inlier_threshold > 0.0) {
            return Err(ReconstructError::InvalidParams("inlier threshold must be > 0".into()));
        }
        if self.iterations == 0 {
            return Err(ReconstructError::InvalidParams("iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(ReconstructError::InvalidParams(
                "min inlier fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFit {
    pub plane: Plane,
    /// Consensus set of the winning hypothesis.
    pub inliers: Vec<bool>,
    /// RMS orthogonal distance of the inliers to the refit plane, m.
    pub inlier_rms: f64,
}

impl PlaneFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|b| **b).count()
    }
}

/// Total-least-squares plane through `points`: centroid and the
/// eigenvector of the smallest scatter eigenvalue.
pub fn fit_plane_tls<'a>(points: impl Iterator<Item = &'a Vector3<f64>> + Clone) -> Option<Plane> {
    let (mut sum, mut n) = (Vector3::zeros(), 0usize);
    for p in points.clone() {
        sum += p;
        n += 1;
    }
    if n < 3 {
        return None;
    }
    let centroid = sum / n as f64;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let q = p - centroid;
        scatter += q * q.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let k = eig.eigenvalues.imin();
    let normal: Vector3<f64> = eig.eigenvectors.column(k).into();
    Plane::new(normal, normal.dot(&centroid)).ok().map(canonical)
}

/// Sign convention: non-negative offset, so the origin sits on the
/// negative side.
fn canonical(plane: Plane) -> Plane {
    if plane.offset() < 0.0 {
        plane.flipped()
    } else {
        plane
    }
}

fn consensus(points: &[Vector3<f64>], plane: &Plane, threshold: f64) -> (usize, f64) {
    let (mut count, mut ss) = (0usize, 0.0);
    for p in points {
        let d = plane.signed_distance(p);
        if d.abs() <= threshold {
            count += 1;
            ss += d * d;
        }
    }
    (
        count,
        if count > 0 {
            (ss / count as f64).sqrt()
        } else {
            f64::INFINITY
        },
    )
}

/// RANSAC on 3-point hypotheses ranked by inlier count (ties: smaller inlier
/// RMS, then earlier draw), followed by a total-least-squares refit on the
/// winner's consensus set. Deterministic for a given seed.
pub fn ransac_plane(cloud: &PointCloud, params: &RansacParams) -> Result<PlaneFit, ReconstructError> {
    params.validate()?;
    let points = cloud.points();
    let n = points.len();
    if n < 3 {
        return Err(ReconstructError::TooFewPoints { found: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let samples: Vec<[usize; 3]> = (0..params.iterations)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let mut c = rng.gen_range(0..n - 2);
            for x in [a.min(b), a.max(b)] {
                if c >= x {
                    c += 1;
                }
            }
            [a, b, c]
        })
        .collect();

    let best = samples
        .par_iter()
        .enumerate()
        .filter_map(|(i, &[a, b, c])| {
            let normal = (points[b] - points[a]).cross(&(points[c] - points[a]));
            if normal.norm() < 1e-12 {
                return None;
            }
            let plane = Plane::new(normal, normal.dot(&points[a])).ok()?;
            let (count, rms) = consensus(points, &plane, params.inlier_threshold);
            Some((count, rms, i, plane))
        })
        .reduce_with(|x, y| {
            let better = y.0 > x.0 || (y.0 == x.0 && (y.1 < x.1 || (y.1 == x.1 && y.2 < x.2)));
            if better {
                y
            } else {
                x
            }
        });
    let Some((count, _, _, candidate)) = best else {
        return Err(ReconstructError::ConsensusFailure {
            fraction: 0.0,
            required: params.min_inlier_fraction,
        });
    };
    let fraction = count as f64 / n as f64;
    if fraction < params.min_inlier_fraction || count < 3 {
        return Err(ReconstructError::ConsensusFailure {
            fraction,
            required: params.min_inlier_fraction,
        });
    }

    let inliers: Vec<bool> = points
        .iter()
        .map(|p| candidate.signed_distance(p).abs() <= params.inlier_threshold)
        .collect();
    let members = points.iter().zip(&inliers).filter(|(_, keep)| **keep).map(|(p, _)| p);
    let plane = fit_plane_tls(members.clone()).unwrap_or_else(|| canonical(candidate));
    let ss: f64 = members.map(|p| plane.signed_distance(p).powi(2)).sum();
    Ok(PlaneFit {
        plane,
        inliers,
        inlier_rms: (ss / count as f64).sqrt(),
    })
}

/// World frame from a still-water plane given in the left camera frame:
/// Z along the plane normal towards the camera, origin at the foot of the
/// perpendicular from the camera centre, X along the camera x-axis
/// projected onto the plane.
pub fn world_frame_from_plane(plane: &Plane, rig: &StereoRig) -> Result<StereoRig, ReconstructError> {
    // the camera centre is the origin; make its signed distance positive
    let plane = if plane.offset() > 0.0 { plane.flipped() } else { *plane };
    let z = *plane.normal();
    if z.z.abs() < 1e-9 {
        return Err(ReconstructError::DegenerateOrientation);
    }
    let ex = Vector3::x();
    let x = ex - z * z.dot(&ex);
    if x.norm() < 1e-9 {
        return Err(ReconstructError::DegenerateOrientation);
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let origin = z * plane.offset();
    let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Ok(rig.with_pose(r, -(r * origin))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// XY of the first cell's lower corner, m.
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid covering the XY bounding box of `cloud`.
    pub fn covering(cloud: &PointCloud, cell: f64) -> Option<GridSpec> {
        if cloud.is_empty() || !(cell > 0.0) {
            return None;
        }
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in cloud.points() {
            for (i, x) in [p.x, p.y].into_iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        let nx = ((max[0] - min[0]) / cell).floor() as usize + 1;
        let ny = ((max[1] - min[1]) / cell).floor() as usize + 1;
        Some(GridSpec {
            origin: min,
            cell,
            nx,
            ny,
        })
    }

    fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = ((x - self.origin[0]) / self.cell).floor();
        let j = ((y - self.origin[1]) / self.cell).floor();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny).then(|| (i as usize, j as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationMap {
    pub grid: GridSpec,
    /// Mean signed distance per cell (NaN where empty), row `j` = Y bin.
    pub values: Grid<f64>,
    pub counts: Grid<usize>,
    /// Over all points, not cells.
    pub summary: DeviationSummary,
}

/// Signed point-plane distances binned onto an XY grid.
pub fn deviation_map(cloud: &PointCloud, plane: &Plane, grid: &GridSpec) -> Result<DeviationMap, ReconstructError> {
    if cloud.is_empty() {
        return Err(ReconstructError::EmptyCloud);
    }
    let mut sums = Grid::filled(grid.nx, grid.ny, 0.0);
    let mut counts = Grid::filled(grid.nx, grid.ny, 0usize);
    let (mut s, mut s2) = (0.0, 0.0);
    let distances: Vec<f64> = cloud.points().iter().map(|p| plane.signed_distance(p)).collect();
    for (p, &d) in cloud.points().iter().zip(&distances) {
        s += d;
        if let Some((i, j)) = grid.cell_of(p.x, p.y) {
            *sums.get_mut(i, j) += d;
            *counts.get_mut(i, j) += 1;
        }
    }
    let n = distances.len() as f64;
    let mean = s / n;
    for d in &distances {
        s2 += (d - mean).powi(2);
    }
    let values = Grid::from_fn(grid.nx, grid.ny, |i, j| {
        let c = *counts.get(i, j);
        if c == 0 {
            f64::NAN
        } else {
            sums.get(i, j) / c as f64
        }
    });
    Ok(DeviationMap {
        grid: *grid,
        values,
        counts,
        summary: DeviationSummary {
            mean,
            std: (s2 / n).sqrt(),
            count: distances.len(),
        },
    })
}

#[cfg(test)]
mod tests;
