//! First-order propagation of pixel quantization error into 3D position
//! error. A positioning error of `e` pixels gives a disparity error of
//! `e / sqrt(2)`; differentiating `z = B f / d` gives the depth error, and
//! the lateral errors follow from `x = x' z / f`.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::StereoRig;

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("depth must be positive and finite, got {0}")]
    NonpositiveDepth(f64),
    #[error("positioning error must be positive and finite, got {0}")]
    BadPositioningError(f64),
    #[error("need 0 < z_min < z_max and at least two samples")]
    BadRange,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Camera-frame error magnitudes in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraErrors {
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
}

/// Errors at pixel `(u, v)` of a point at depth `z` for a positioning
/// error of `e` pixels. The lateral terms use sensor-plane coordinates
/// `x' = (u - u0) * pitch` in meters.
pub fn quantization_errors(z: f64, u: f64, v: f64, rig: &StereoRig, e: f64) -> Result<CameraErrors, BudgetError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(BudgetError::NonpositiveDepth(z));
    }
    if !(e.is_finite() && e > 0.0) {
        return Err(BudgetError::BadPositioningError(e));
    }
    let (b, f) = (rig.baseline(), rig.focal_px());
    let x_s = (u - rig.u0()) * rig.pixel_pitch();
    let y_s = (v - rig.v0()) * rig.pixel_pitch();
    let lateral = |s: f64| (1.0 + (s / (SQRT_2 * b)).powi(2)).sqrt() * z / f * e;
    Ok(CameraErrors {
        e_x: lateral(x_s),
        e_y: lateral(y_s),
        e_z: z * z * e / (SQRT_2 * b * f),
    })
}

/// Rotates the camera-frame error vector into the world frame and reports
/// the magnitude of each component.
pub fn world_errors(errors: &CameraErrors, rig: &StereoRig) -> [f64; 3] {
    let r = rig.rotation();
    let e = nalgebra::Vector3::new(errors.e_x, errors.e_y, errors.e_z);
    let w = r * e;
    [w.x.abs(), w.y.abs(), w.z.abs()]
}

/// One row of a budget table, all lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub z: f64,
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
    pub e_xw: f64,
    pub e_yw: f64,
    pub e_zw: f64,
    /// Positioning error in pixels.
    pub e: f64,
}

/// Budgets at the principal point for `n` depths spaced evenly over
/// `[z_min, z_max]`.
pub fn budget_table(
    rig: &StereoRig,
    z_min: f64,
    z_max: f64,
    n: usize,
    e: f64,
) -> Result<Vec<ErrorBudget>, BudgetError> {
    if !(z_min > 0.0 && z_min < z_max && z_max.is_finite()) || n < 2 {
        return Err(BudgetError::BadRange);
    }
    (0..n)
        .map(|i| {
            let z = z_min + (z_max - z_min) * i as f64 / (n - 1) as f64;
            let cam = quantization_errors(z, rig.u0(), rig.v0(), rig, e)?;
            let [e_xw, e_yw, e_zw] = world_errors(&cam, rig);
            Ok(ErrorBudget {
                z,
                e_x: cam.e_x,
                e_y: cam.e_y,
                e_z: cam.e_z,
                e_xw,
                e_yw,
                e_zw,
                e,
            })
        })
        .collect()
}

/// CSV with columns `z,e_x,e_y,e_z,e_xw,e_yw,e_zw`.
pub fn encode_budget_csv(rows: &[ErrorBudget]) -> Result<Vec<u8>, BudgetError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["z", "e_x", "e_y", "e_z", "e_xw", "e_yw", "e_zw"])?;
    for r in rows {
        w.write_record([r.z, r.e_x, r.e_y, r.e_z, r.e_xw, r.e_yw, r.e_zw].map(|x| x.to_string()))?;
    }
    w.into_inner().map_err(|e| BudgetError::Csv(e.into_error().into()))
}
