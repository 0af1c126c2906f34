//! Rectified-stereo triangulation: disparity to depth, pixel to camera ray,
//! camera to world.
//!
//! Pixel units are used throughout; metric sensor coordinates appear only
//! in [`crate::budget`], via `x' = (u - u0) * pixel_pitch`.

use nalgebra::Vector3;
use thiserror::Error;

use crate::model::StereoRig;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("disparity {0} must be finite and > 0")]
    NonpositiveDisparity(f64),
    #[error("depth {0} must be finite and > 0")]
    NonpositiveDepth(f64),
}

/// `z = B * f / d`.
pub fn depth_from_disparity(d: f64, rig: &StereoRig) -> Result<f64, GeometryError> {
    if !(d.is_finite() && d > 0.0) {
        return Err(GeometryError::NonpositiveDisparity(d));
    }
    Ok(rig.baseline() * rig.focal_px() / d)
}

/// `d = B * f / z`.
pub fn disparity_from_depth(z: f64, rig: &StereoRig) -> Result<f64, GeometryError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(GeometryError::NonpositiveDepth(z));
    }
    Ok(rig.baseline() * rig.focal_px() / z)
}

/// Back-projects a pixel at depth `z` into the left camera frame.
pub fn pixel_to_camera(u: f64, v: f64, z: f64, rig: &StereoRig) -> Result<Vector3<f64>, GeometryError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(GeometryError::NonpositiveDepth(z));
    }
    let f = rig.focal_px();
    Ok(Vector3::new(z * (u - rig.u0()) / f, z * (v - rig.v0()) / f, z))
}

/// Left-camera point from a left pixel and its disparity.
pub fn triangulate(u: f64, v: f64, d: f64, rig: &StereoRig) -> Result<Vector3<f64>, GeometryError> {
    pixel_to_camera(u, v, depth_from_disparity(d, rig)?, rig)
}

/// Projects a left-camera point into the left image. `None` behind the camera.
pub fn project_left(p: &Vector3<f64>, rig: &StereoRig) -> Option<(f64, f64)> {
    (p.z > 0.0).then(|| {
        let f = rig.focal_px();
        (rig.u0() + f * p.x / p.z, rig.v0() + f * p.y / p.z)
    })
}

/// Projects a left-camera point into the right image.
pub fn project_right(p: &Vector3<f64>, rig: &StereoRig) -> Option<(f64, f64)> {
    project_left(&Vector3::new(p.x - rig.baseline(), p.y, p.z), rig)
}

pub fn camera_to_world(p: &Vector3<f64>, rig: &StereoRig) -> Vector3<f64> {
    rig.rotation() * p + rig.translation()
}

pub fn world_to_camera(p: &Vector3<f64>, rig: &StereoRig) -> Vector3<f64> {
    rig.rotation().transpose() * (p - rig.translation())
}

/// Rectified correspondence: the same row, shifted left by the disparity.
pub fn reproject_left_to_right(u: f64, v: f64, d: f64) -> (f64, f64) {
    (u - d, v)
}

/// World-frame direction of the left-camera ray through pixel `(u, v)`
/// (not normalized; camera-frame z component is 1).
pub fn pixel_ray_world(u: f64, v: f64, rig: &StereoRig) -> Vector3<f64> {
    let f = rig.focal_px();
    rig.rotation() * Vector3::new((u - rig.u0()) / f, (v - rig.v0()) / f, 1.0)
}
