//! Domain types shared by every stage of the pipeline.
//!
//! All rasters are stored top-down, row-major. Conversions to other
//! orientations (PFM is bottom-up) happen only in [`crate::formats`].

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Violations of a domain type's construction invariants.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("buffer holds {len} values but {width}x{height} needs {expected}")]
    SizeMismatch {
        width: usize,
        height: usize,
        len: usize,
        expected: usize,
    },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("valid disparity at index {index} is {value}, must be finite and > 0")]
    BadDisparity { index: usize, value: f64 },
    #[error("focal length must be positive")]
    NonpositiveFocal,
    #[error("baseline must be positive")]
    NonpositiveBaseline,
    #[error("pixel pitch must be positive")]
    NonpositivePitch,
    #[error("sensor size must be non-zero")]
    EmptySensor,
    #[error("rotation is not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("rotation has determinant {det}, reflections are not allowed")]
    ReflectionNotAllowed { det: f64 },
    #[error("intensity has {got} entries for {points} points")]
    IntensityLength { got: usize, points: usize },
    #[error("sample interval must be positive and finite")]
    BadInterval,
    #[error("plane normal must be non-zero")]
    ZeroNormal,
    #[error("window {x0},{y0} {width}x{height} does not fit the sensor")]
    BadWindow {
        x0: usize,
        y0: usize,
        width: usize,
        height: usize,
    },
}

/// Plain row-major 2D container. Carries no invariants beyond its size.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, ModelError> {
        let expected = width.checked_mul(height).ok_or(ModelError::SizeMismatch {
            width,
            height,
            len: data.len(),
            expected: usize::MAX,
        })?;
        if data.len() != expected {
            return Err(ModelError::SizeMismatch {
                width,
                height,
                len: data.len(),
                expected,
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> &T {
        &self.data[v * self.width + u]
    }

    #[inline]
    pub fn get_mut(&mut self, u: usize, v: usize) -> &mut T {
        &mut self.data[v * self.width + u]
    }

    pub fn row(&self, v: usize) -> &[T] {
        &self.data[v * self.width..(v + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Grid<T> {
    /// Sub-window copy. Panics if the window does not fit.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Grid<T> {
        assert!(x0 + width <= self.width && y0 + height <= self.height);
        let mut data = Vec::with_capacity(width * height);
        for v in y0..y0 + height {
            data.extend_from_slice(&self.row(v)[x0..x0 + width]);
        }
        Grid { width, height, data }
    }

    /// Left-right mirror image.
    pub fn mirrored(&self) -> Grid<T> {
        let mut data = Vec::with_capacity(self.data.len());
        for v in 0..self.height {
            data.extend(self.row(v).iter().rev().cloned());
        }
        Grid {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Single-channel float raster with finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Image(Grid<f64>);

impl Image {
    pub fn new(grid: Grid<f64>) -> Result<Self, ModelError> {
        if let Some(index) = grid.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        Ok(Self(grid))
    }

    pub fn from_vec(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(Grid::from_vec(width, height, pixels)?)
    }

    /// Builds an image from a pixel function; non-finite results are an error.
    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self, ModelError> {
        Self::new(Grid::from_fn(width, height, f))
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        assert!(value.is_finite());
        Self(Grid::filled(width, height, value))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        *self.0.get(u, v)
    }

    pub fn pixels(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.0
    }

    pub fn into_grid(self) -> Grid<f64> {
        self.0
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Image {
        Image(self.0.crop(x0, y0, width, height))
    }

    pub fn mirrored(&self) -> Image {
        Image(self.0.mirrored())
    }
}

/// Per-pixel horizontal disparity with an authoritative validity mask.
/// Invalid entries hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    values: Grid<f64>,
    mask: Grid<bool>,
}

impl DisparityMap {
    /// Validates that every masked-in value is finite and positive and
    /// overwrites masked-out values with NaN.
    pub fn new(mut values: Grid<f64>, mask: Grid<bool>) -> Result<Self, ModelError> {
        if values.dims() != mask.dims() {
            return Err(ModelError::SizeMismatch {
                width: values.width(),
                height: values.height(),
                len: mask.len(),
                expected: values.len(),
            });
        }
        for (index, (d, &ok)) in values.as_mut_slice().iter_mut().zip(mask.as_slice()).enumerate() {
            if ok {
                if !(d.is_finite() && *d > 0.0) {
                    return Err(ModelError::BadDisparity { index, value: *d });
                }
            } else {
                *d = f64::NAN;
            }
        }
        Ok(Self { values, mask })
    }

    /// Masks every entry that is non-finite, non-positive or rejected by `keep`.
    pub fn from_values_filtered(values: Grid<f64>, keep: impl Fn(f64) -> bool) -> Self {
        let mask = values.map(|&d| d.is_finite() && d > 0.0 && keep(d));
        Self::new(values, mask).expect("mask built from the same predicate")
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            values: Grid::filled(width, height, f64::NAN),
            mask: Grid::filled(width, height, false),
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    /// Disparity at a pixel, `None` when masked out.
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        if *self.mask.get(u, v) {
            Some(*self.values.get(u, v))
        } else {
            None
        }
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Grid<bool> {
        &self.mask
    }

    pub fn valid_count(&self) -> usize {
        self.mask.as_slice().iter().filter(|&&m| m).count()
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> DisparityMap {
        DisparityMap {
            values: self.values.crop(x0, y0, width, height),
            mask: self.mask.crop(x0, y0, width, height),
        }
    }
}

/// Rectified pinhole stereo pair. The left camera is the reference; the
/// right camera sits `baseline` meters along the left camera's +x axis
/// with identical orientation and intrinsics.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoRig {
    focal_m: f64,
    pixel_pitch: f64,
    focal_px: f64,
    baseline: f64,
    u0: f64,
    v0: f64,
    width: usize,
    height: usize,
    r_cw: Matrix3<f64>,
    t_cw: Vector3<f64>,
}

const ROTATION_TOL: f64 = 1e-9;

pub(crate) fn check_rotation(r: &Matrix3<f64>) -> Result<(), ModelError> {
    let deviation = (r.transpose() * r - Matrix3::identity()).abs().max();
    let det = r.determinant();
    if !deviation.is_finite() || deviation >= ROTATION_TOL {
        return Err(ModelError::NotOrthonormal { deviation });
    }
    if (det - 1.0).abs() >= ROTATION_TOL {
        return Err(ModelError::ReflectionNotAllowed { det });
    }
    Ok(())
}

impl StereoRig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        focal_m: f64,
        pixel_pitch: f64,
        baseline: f64,
        u0: f64,
        v0: f64,
        width: usize,
        height: usize,
        r_cw: Matrix3<f64>,
        t_cw: Vector3<f64>,
    ) -> Result<Self, ModelError> {
        if !(focal_m.is_finite() && focal_m > 0.0) {
            return Err(ModelError::NonpositiveFocal);
        }
        if !(pixel_pitch.is_finite() && pixel_pitch > 0.0) {
            return Err(ModelError::NonpositivePitch);
        }
        if !(baseline.is_finite() && baseline > 0.0) {
            return Err(ModelError::NonpositiveBaseline);
        }
        if width == 0 || height == 0 {
            return Err(ModelError::EmptySensor);
        }
        if !(u0.is_finite() && v0.is_finite()) || t_cw.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite { index: 0 });
        }
        check_rotation(&r_cw)?;
        Ok(Self {
            focal_m,
            pixel_pitch,
            focal_px: focal_m / pixel_pitch,
            baseline,
            u0,
            v0,
            width,
            height,
            r_cw,
            t_cw,
        })
    }

    /// Table-I style thermal camera pair: 12 mm lens, 17 um pixels,
    /// 640x512 sensor, 6 cm baseline, mounted 0.6 m above still water with
    /// the optical axis tilted 22.8 degrees from the vertical towards +Y.
    ///
    /// World frame: X along the baseline (and wave propagation), Z up,
    /// still water at Z = 0.
    pub fn default_flume() -> Self {
        Self::flume(0.06, 0.6, 22.8_f64.to_radians())
    }

    /// Flume rig with the default intrinsics and a chosen geometry.
    pub fn flume(baseline: f64, height_m: f64, tilt_rad: f64) -> Self {
        Self::new(
            12e-3,
            17e-6,
            baseline,
            319.5,
            255.5,
            640,
            512,
            looking_down(tilt_rad),
            Vector3::new(0.0, 0.0, height_m),
        )
        .expect("default rig is valid")
    }

    pub fn focal_m(&self) -> f64 {
        self.focal_m
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn focal_px(&self) -> f64 {
        self.focal_px
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r_cw
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t_cw
    }

    /// Left camera center in world coordinates.
    pub fn left_center(&self) -> Vector3<f64> {
        self.t_cw
    }

    /// Right camera center in world coordinates.
    pub fn right_center(&self) -> Vector3<f64> {
        self.t_cw + self.r_cw * Vector3::new(self.baseline, 0.0, 0.0)
    }

    /// Same cameras, new camera-to-world pose.
    pub fn with_pose(&self, r_cw: Matrix3<f64>, t_cw: Vector3<f64>) -> Result<Self, ModelError> {
        Self::new(
            self.focal_m,
            self.pixel_pitch,
            self.baseline,
            self.u0,
            self.v0,
            self.width,
            self.height,
            r_cw,
            t_cw,
        )
    }

    /// Rig describing a sub-window of both sensors. Disparities are
    /// unchanged by a common crop; only the principal point moves.
    pub fn window(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self, ModelError> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(ModelError::BadWindow { x0, y0, width, height });
        }
        Self::new(
            self.focal_m,
            self.pixel_pitch,
            self.baseline,
            self.u0 - x0 as f64,
            self.v0 - y0 as f64,
            width,
            height,
            self.r_cw,
            self.t_cw,
        )
    }
}

/// Camera-to-world rotation for a camera above the water looking down,
/// tilted by `tilt` about its own x axis so the optical axis leans towards
/// world +Y.
pub fn looking_down(tilt: f64) -> Matrix3<f64> {
    let flip = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
    flip * rotation_x(tilt)
}

/// Right-handed rotation about the x axis.
pub fn rotation_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Camera,
    World,
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frame::Camera => f.write_str("camera"),
            Frame::World => f.write_str("world"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    intensity: Vec<f64>,
    frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, intensity: Vec<f64>, frame: Frame) -> Result<Self, ModelError> {
        if let Some(index) = points.iter().position(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(ModelError::NonFinite { index });
        }
        if !intensity.is_empty() && intensity.len() != points.len() {
            return Err(ModelError::IntensityLength {
                got: intensity.len(),
                points: points.len(),
            });
        }
        Ok(Self {
            points,
            intensity,
            frame,
        })
    }

    pub fn empty(frame: Frame) -> Self {
        Self {
            points: Vec::new(),
            intensity: Vec::new(),
            frame,
        }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    /// Per-point intensity; empty when the cloud carries none.
    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Uniformly sampled elevation record at one probe location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSeries {
    t0: f64,
    dt: f64,
    eta: Vec<f64>,
    probe_id: String,
    probe_xy: [f64; 2],
}

impl WaveSeries {
    pub fn new(
        t0: f64,
        dt: f64,
        eta: Vec<f64>,
        probe_id: impl Into<String>,
        probe_xy: [f64; 2],
    ) -> Result<Self, ModelError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(ModelError::BadInterval);
        }
        if !t0.is_finite() || probe_xy.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite { index: 0 });
        }
        if let Some(index) = eta.iter().position(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite { index });
        }
        Ok(Self {
            t0,
            dt,
            eta,
            probe_id: probe_id.into(),
            probe_xy,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn probe_id(&self) -> &str {
        &self.probe_id
    }

    pub fn probe_xy(&self) -> [f64; 2] {
        self.probe_xy
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }
}

/// Plane `n . p = c` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vector3<f64>,
    offset: f64,
}

impl Plane {
    /// Normalizes `normal` (and scales `offset` to match).
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self, ModelError> {
        let norm = normal.norm();
        if !(norm.is_finite() && norm > 0.0) || !offset.is_finite() {
            return Err(ModelError::ZeroNormal);
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    pub fn normal(&self) -> &Vector3<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed orthogonal distance, positive on the side the normal points to.
    #[inline]
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn flipped(&self) -> Plane {
        Plane {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}
