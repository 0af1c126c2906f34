//! Synthetic thermal wave flume with analytically known ground truth.
//!
//! A linear (Airy) regular wave with finite-depth dispersion is rendered
//! through a [`StereoRig`] by intersecting every camera ray with the
//! surface. The water carries an advecting band-limited value-noise texture
//! that stands in for thermal streaks; an optional vertical cylinder
//! occludes parts of the surface. Besides the image pair the renderer
//! returns the exact left-referenced disparity of every surface point and a
//! visibility mask for the right camera.

mod texture;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{pixel_ray_world, world_to_camera};
use crate::model::{looking_down, DisparityMap, Grid, Image, ModelError, StereoRig, WaveSeries};

pub use texture::{gaussian_noise, value_noise};

/// Standard gravity, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.80665;
/// Steepness limit of a progressive wave.
pub const LIMITING_STEEPNESS: f64 = 0.142;
/// Bisection steps used for ray/surface intersection.
const RAY_BISECTION_STEPS: usize = 30;
/// Samples along the right-camera sight line when testing visibility.
const VISIBILITY_SAMPLES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("dispersion relation bisection failed for period {period} s, depth {depth} m")]
    DispersionNoConvergence { period: f64, depth: f64 },
    #[error("{camera} ray through pixel ({u}, {v}) leaves the simulated patch without hitting water")]
    RayMiss { camera: &'static str, u: usize, v: usize },
    #[error("probe ({x}, {y}) lies outside the simulated water surface")]
    ProbeOutsideExtent { x: f64, y: f64 },
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    /// Crest-to-trough height, m.
    pub height: f64,
    /// Period, s.
    pub period: f64,
    /// Phase offset, rad.
    #[serde(default)]
    pub phase: f64,
}

/// Rectangular patch of water that exists in the simulation (world XY, m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub center: [f64; 2],
    pub size: [f64; 2],
}

impl Extent {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).abs() <= 0.5 * self.size[0] && (y - self.center[1]).abs() <= 0.5 * self.size[1]
    }

    pub fn min(&self) -> [f64; 2] {
        [self.center[0] - 0.5 * self.size[0], self.center[1] - 0.5 * self.size[1]]
    }
}

/// Vertical circular cylinder standing in the water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub wave: WaveParams,
    /// Still-water depth h, m.
    pub water_depth: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub extent: Extent,
    pub texture_seed: u64,
    /// RMS texture contrast around mid-grey, intensity units.
    pub texture_contrast: f64,
    /// Lattice spacing of the coarsest texture octave, m.
    pub texture_correlation: f64,
    /// Standard deviation of additive sensor noise, intensity units.
    pub noise_sigma: f64,
    #[serde(default)]
    pub cylinder: Option<Cylinder>,
    #[serde(with = "rig_json")]
    pub rig: StereoRig,
    pub frame_rate: f64,
    /// Still water: the wave is ignored and the surface is Z = 0.
    #[serde(default)]
    pub flat: bool,
    /// Spacing of the ground-truth elevation grid, m.
    #[serde(default = "default_grid_spacing")]
    pub eta_grid_spacing: f64,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn default_grid_spacing() -> f64 {
    0.01
}

mod rig_json {
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    use crate::formats::{encode_calibration, parse_calibration};
    use crate::model::StereoRig;

    pub fn serialize<S: Serializer>(rig: &StereoRig, s: S) -> Result<S::Ok, S::Error> {
        let value: serde_json::Value =
            serde_json::from_slice(&encode_calibration(rig)).map_err(serde::ser::Error::custom)?;
        value.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<StereoRig, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        let bytes = serde_json::to_vec(&value).map_err(D::Error::custom)?;
        parse_calibration(&bytes).map_err(D::Error::custom)
    }
}

/// Wave periods and heights (s, m) of the four regular-wave comparison
/// cases: T in {0.632, 0.791} s at steepness 2/25 and 1/10.
pub const COMPARISON_CASES: [(f64, f64); 4] = [(0.632, 0.0528), (0.632, 0.0682), (0.791, 0.0822), (0.791, 0.1058)];

impl SceneSpec {
    /// Default flume scene: 0.9 m deep water, 50 fps, the default rig and a
    /// T = 0.632 s, H = 5.28 cm wave.
    pub fn default_flume() -> Self {
        let rig = StereoRig::default_flume();
        let extent = footprint_extent(&rig);
        Self {
            wave: WaveParams {
                height: 0.0528,
                period: 0.632,
                phase: 0.0,
            },
            water_depth: 0.9,
            gravity: STANDARD_GRAVITY,
            extent,
            texture_seed: 7,
            texture_contrast: 40.0,
            texture_correlation: 0.018,
            noise_sigma: 0.5,
            cylinder: None,
            rig,
            frame_rate: 50.0,
            flat: false,
            eta_grid_spacing: default_grid_spacing(),
        }
    }

    /// Default scene with the given regular wave.
    pub fn regular_wave(period: f64, height: f64) -> Self {
        let mut spec = Self::default_flume();
        spec.wave.period = period;
        spec.wave.height = height;
        spec
    }

    /// Still water seen by a camera pointing straight down from the height
    /// at which every pixel has disparity `disparity`.
    pub fn nadir_still(disparity: f64) -> Result<Self, SceneError> {
        let base = StereoRig::default_flume();
        let z = base.baseline() * base.focal_px() / disparity;
        if !(z.is_finite() && z > 0.0) {
            return Err(SceneError::Invalid("disparity must be > 0".into()));
        }
        let rig = base.with_pose(looking_down(0.0), Vector3::new(0.0, 0.0, z))?;
        Ok(Self {
            extent: footprint_extent(&rig),
            rig,
            ..Self::default_flume().still()
        })
    }

    /// Same scene with still water.
    pub fn still(&self) -> Self {
        Self {
            flat: true,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(SceneError::Invalid(what.into()))
            }
        };
        check(positive(self.wave.height), "wave height must be > 0")?;
        check(positive(self.wave.period), "wave period must be > 0")?;
        check(self.wave.phase.is_finite(), "wave phase must be finite")?;
        check(positive(self.water_depth), "water depth must be > 0")?;
        check(positive(self.gravity), "gravity must be > 0")?;
        check(positive(self.frame_rate), "frame rate must be > 0")?;
        check(
            positive(self.extent.size[0]) && positive(self.extent.size[1]),
            "extent must be non-empty",
        )?;
        check(positive(self.texture_correlation), "texture correlation must be > 0")?;
        check(
            self.texture_contrast.is_finite() && self.texture_contrast >= 0.0,
            "texture contrast must be >= 0",
        )?;
        check(
            self.noise_sigma.is_finite() && self.noise_sigma >= 0.0,
            "noise sigma must be >= 0",
        )?;
        check(positive(self.eta_grid_spacing), "elevation grid spacing must be > 0")?;
        if let Some(c) = &self.cylinder {
            check(positive(c.radius), "cylinder radius must be > 0")?;
        }
        if !self.flat {
            let wave = self.wave_model()?;
            let steepness = self.wave.height / wave.wavelength();
            if steepness > LIMITING_STEEPNESS {
                return Err(SceneError::Invalid(format!(
                    "steepness H/L = {steepness:.4} exceeds the limiting value {LIMITING_STEEPNESS}"
                )));
            }
        }
        Ok(())
    }

    /// Kinematics of the configured wave (zero amplitude for still water).
    pub fn wave_model(&self) -> Result<WaveModel, SceneError> {
        let omega = 2.0 * std::f64::consts::PI / self.wave.period;
        let k = wavenumber(omega, self.water_depth, self.gravity).ok_or(SceneError::DispersionNoConvergence {
            period: self.wave.period,
            depth: self.water_depth,
        })?;
        Ok(WaveModel {
            amplitude: if self.flat { 0.0 } else { 0.5 * self.wave.height },
            k,
            omega,
            phase: self.wave.phase,
        })
    }

    /// World XY where the left camera's principal ray meets still water.
    pub fn principal_footprint(&self) -> [f64; 2] {
        let c = self.rig.left_center();
        let dir = pixel_ray_world(self.rig.u0(), self.rig.v0(), &self.rig);
        let s = -c.z / dir.z;
        [c.x + s * dir.x, c.y + s * dir.y]
    }

    /// Bounds on the ground-truth disparity over the sensor, from rays
    /// intersected with the planes at the highest crest and lowest trough.
    pub fn disparity_bounds(&self) -> (f64, f64) {
        let a = if self.flat { 0.0 } else { 0.5 * self.wave.height };
        let rig = &self.rig;
        let c = rig.left_center();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let step = 8;
        let us = (0..rig.width()).step_by(step).chain([rig.width() - 1]);
        for u in us {
            for v in (0..rig.height()).step_by(step).chain([rig.height() - 1]) {
                let dir = pixel_ray_world(u as f64, v as f64, rig);
                for level in [-a, a] {
                    let s = (level - c.z) / dir.z;
                    if s > 0.0 {
                        // camera-frame depth is s because the camera-frame ray has z = 1
                        let d = rig.baseline() * rig.focal_px() / s;
                        lo = lo.min(d);
                        hi = hi.max(d);
                    }
                }
            }
        }
        (lo, hi)
    }
}

/// Rectangle comfortably covering what the rig sees of still water.
pub fn footprint_extent(rig: &StereoRig) -> Extent {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for center in [rig.left_center(), rig.right_center()] {
        for (u, v) in [
            (0.0, 0.0),
            (rig.width() as f64, 0.0),
            (0.0, rig.height() as f64),
            (rig.width() as f64, rig.height() as f64),
        ] {
            let f = rig.focal_px();
            let dir = rig.rotation() * Vector3::new((u - rig.u0()) / f, (v - rig.v0()) / f, 1.0);
            if dir.z >= 0.0 {
                continue;
            }
            let s = -center.z / dir.z;
            for (i, x) in [center.x + s * dir.x, center.y + s * dir.y].into_iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
    }
    let margin = 0.15;
    Extent {
        center: [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])],
        size: [max[0] - min[0] + 2.0 * margin, max[1] - min[1] + 2.0 * margin],
    }
}

/// Solves `omega^2 = g k tanh(k h)` for `k` by bisection to 1e-12 relative.
pub fn wavenumber(omega: f64, depth: f64, gravity: f64) -> Option<f64> {
    if !(omega.is_finite() && omega > 0.0 && depth > 0.0 && gravity > 0.0) {
        return None;
    }
    let residual = |k: f64| gravity * k * (k * depth).tanh() - omega * omega;
    // deep-water wavenumber is a lower bound; finite depth only shortens waves
    let mut lo = omega * omega / gravity;
    let mut hi = lo / (lo * depth).tanh();
    if !(hi.is_finite() && residual(lo) <= 0.0 && residual(hi) >= 0.0) {
        return None;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            return Some(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    None
}

/// Linear progressive wave travelling along +X.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveModel {
    pub amplitude: f64,
    pub k: f64,
    pub omega: f64,
    pub phase: f64,
}

impl WaveModel {
    #[inline]
    pub fn eta(&self, x: f64, _y: f64, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * (self.k * x - self.omega * t + self.phase).cos()
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k
    }

    pub fn phase_speed(&self) -> f64 {
        self.omega / self.k
    }
}

/// `eta = (H/2) cos(k x - omega t + phase)`.
pub fn surface_elevation(x: f64, y: f64, t: f64, spec: &SceneSpec) -> Result<f64, SceneError> {
    Ok(spec.wave_model()?.eta(x, y, t))
}

/// Elevation samples over the simulated patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub values: Grid<f64>,
}

impl ElevationGrid {
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Left-referenced disparity; masked where the right camera can't see
    /// the surface point.
    pub disparity: DisparityMap,
    /// `u_l - u_r` for every left pixel, hidden or not (NaN only behind the
    /// right camera).
    pub raw_disparity: Grid<f64>,
    pub eta_grid: ElevationGrid,
    /// True where the left pixel's surface point is visible from the right camera.
    pub visibility: Grid<bool>,
    /// True where the left ray hits the cylinder rather than water.
    pub on_cylinder: Grid<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoFrame {
    pub left: Image,
    pub right: Image,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, Copy)]
enum Hit {
    Water(Vector3<f64>),
    Cylinder(Vector3<f64>),
}

impl Hit {
    fn point(&self) -> Vector3<f64> {
        match self {
            Hit::Water(p) | Hit::Cylinder(p) => *p,
        }
    }
}

/// Everything needed to shade and intersect at one instant.
struct Renderer<'a> {
    spec: &'a SceneSpec,
    wave: WaveModel,
    t: f64,
    bracket: f64,
    advection: f64,
    frame_key: u64,
}

impl<'a> Renderer<'a> {
    fn new(spec: &'a SceneSpec, t: f64) -> Result<Self, SceneError> {
        spec.validate()?;
        let wave = spec.wave_model()?;
        Ok(Self {
            spec,
            wave,
            t,
            bracket: spec.wave.height.max(1e-3),
            advection: wave.phase_speed() * t,
            frame_key: t.to_bits(),
        })
    }

    #[inline]
    fn gap(&self, p: &Vector3<f64>) -> f64 {
        p.z - self.wave.eta(p.x, p.y, self.t)
    }

    /// First entry of the ray into the cylinder above the water, if any,
    /// strictly before parameter `limit`.
    fn cylinder_entry(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, limit: f64) -> Option<f64> {
        let c = self.spec.cylinder.as_ref()?;
        let (ox, oy) = (origin.x - c.center[0], origin.y - c.center[1]);
        let a = dir.x * dir.x + dir.y * dir.y;
        if a == 0.0 {
            return None;
        }
        let b = 2.0 * (ox * dir.x + oy * dir.y);
        let cc = ox * ox + oy * oy - c.radius * c.radius;
        let disc = b * b - 4.0 * a * cc;
        if disc < 0.0 {
            return None;
        }
        let s = (-b - disc.sqrt()) / (2.0 * a);
        if s <= 0.0 || s >= limit {
            return None;
        }
        let p = origin + dir * s;
        (self.gap(&p) > 0.0).then_some(s)
    }

    /// Intersects a downward ray with the scene.
    fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        if dir.z >= 0.0 {
            return None;
        }
        let mut lo = (self.bracket - origin.z) / dir.z;
        let mut hi = (-self.bracket - origin.z) / dir.z;
        if lo < 0.0 {
            return None;
        }
        let mut g_lo = self.gap(&(origin + dir * lo));
        let mut g_hi = self.gap(&(origin + dir * hi));
        if !(g_lo > 0.0 && g_hi < 0.0) {
            return None;
        }
        for _ in 0..RAY_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let g = self.gap(&(origin + dir * mid));
            if g > 0.0 {
                lo = mid;
                g_lo = g;
            } else {
                hi = mid;
                g_hi = g;
            }
        }
        // closing secant step inside the final bracket
        let s = lo + (hi - lo) * g_lo / (g_lo - g_hi);
        if let Some(sc) = self.cylinder_entry(origin, dir, s) {
            return Some(Hit::Cylinder(origin + dir * sc));
        }
        let p = origin + dir * s;
        if !self.spec.extent.contains(p.x, p.y) {
            return None;
        }
        if let Some(c) = &self.spec.cylinder {
            let (dx, dy) = (p.x - c.center[0], p.y - c.center[1]);
            if dx * dx + dy * dy < c.radius * c.radius {
                return None;
            }
        }
        Some(Hit::Water(p))
    }

    /// Noise is keyed by the pixel's offset from the principal point, so a
    /// windowed rig renders exactly the matching crop of the full sensor.
    fn shade(&self, hit: &Hit, camera: u64, u: usize, v: usize) -> f64 {
        let spec = self.spec;
        let base = match hit {
            Hit::Water(p) => {
                let tex = texture::thermal_streaks(
                    spec.texture_seed,
                    (p.x - self.advection) / spec.texture_correlation,
                    p.y / spec.texture_correlation,
                );
                128.0 + spec.texture_contrast * tex
            }
            Hit::Cylinder(p) => {
                let c = spec.cylinder.as_ref().expect("cylinder hit without cylinder");
                let arc = (p.y - c.center[1]).atan2(p.x - c.center[0]) * c.radius;
                texture::foil_patches(spec.texture_seed, arc, p.z)
            }
        };
        let rig = &spec.rig;
        let noise_key = [
            spec.texture_seed,
            self.frame_key,
            camera,
            (u as f64 - rig.u0()).to_bits(),
            (v as f64 - rig.v0()).to_bits(),
        ];
        // 8-bit sensor range
        (base + spec.noise_sigma * gaussian_noise(&noise_key)).clamp(0.0, 255.0)
    }

    /// Right-image column the surface point projects to, if it lies in
    /// front of the right camera.
    fn right_column(&self, hit: &Hit) -> Option<f64> {
        let rig = &self.spec.rig;
        let pc = world_to_camera(&hit.point(), rig);
        (pc.z > 0.0).then(|| rig.u0() + rig.focal_px() * (pc.x - rig.baseline()) / pc.z)
    }

    /// Whether the right camera sees the point unobstructed and inside its
    /// image.
    fn visible_from_right(&self, hit: &Hit, u_r: f64) -> bool {
        let rig = &self.spec.rig;
        if !(u_r >= -0.5 && u_r <= rig.width() as f64 - 0.5) {
            return false;
        }
        let origin = rig.right_center();
        let dir = hit.point() - origin;
        let end = 1.0 - 1e-9;
        if self.cylinder_entry(&origin, &dir, end).is_some() {
            return false;
        }
        if dir.z < 0.0 {
            let start = ((self.bracket - origin.z) / dir.z).clamp(0.0, end);
            for i in 0..VISIBILITY_SAMPLES {
                let s = start + (end - start) * i as f64 / VISIBILITY_SAMPLES as f64;
                if self.gap(&(origin + dir * s)) < 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Renders the rectified pair at time `t` together with its ground truth.
pub fn render_stereo_pair(spec: &SceneSpec, t: f64) -> Result<StereoFrame, SceneError> {
    let renderer = Renderer::new(spec, t)?;
    let rig = &spec.rig;
    let (w, h) = (rig.width(), rig.height());

    struct LeftPixel {
        intensity: f64,
        raw: f64,
        visible: bool,
        on_cylinder: bool,
    }

    let left_center = rig.left_center();
    let left_rows: Vec<Result<Vec<LeftPixel>, SceneError>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .map(|u| {
                    let dir = pixel_ray_world(u as f64, v as f64, rig);
                    let hit = renderer
                        .cast(&left_center, &dir)
                        .ok_or(SceneError::RayMiss { camera: "left", u, v })?;
                    let u_r = renderer.right_column(&hit);
                    let raw = u_r.map_or(f64::NAN, |x| u as f64 - x);
                    Ok(LeftPixel {
                        intensity: renderer.shade(&hit, 0, u, v),
                        raw,
                        visible: raw > 0.0 && u_r.is_some_and(|x| renderer.visible_from_right(&hit, x)),
                        on_cylinder: matches!(hit, Hit::Cylinder(_)),
                    })
                })
                .collect()
        })
        .collect();

    let right_center = rig.right_center();
    let right_rows: Vec<Result<Vec<f64>, SceneError>> = (0..h)
        .into_par_iter()
        .map(|v| {
            (0..w)
                .map(|u| {
                    let dir = pixel_ray_world(u as f64, v as f64, rig);
                    let hit =
                        renderer
                            .cast(&right_center, &dir)
                            .ok_or(SceneError::RayMiss { camera: "right", u, v })?;
                    Ok(renderer.shade(&hit, 1, u, v))
                })
                .collect()
        })
        .collect();

    let mut left = Vec::with_capacity(w * h);
    let mut raw = Vec::with_capacity(w * h);
    let mut disparity = Vec::with_capacity(w * h);
    let mut visible = Vec::with_capacity(w * h);
    let mut on_cylinder = Vec::with_capacity(w * h);
    for row in left_rows {
        for px in row? {
            left.push(px.intensity);
            raw.push(px.raw);
            disparity.push(if px.visible { px.raw } else { f64::NAN });
            visible.push(px.visible);
            on_cylinder.push(px.on_cylinder);
        }
    }
    let mut right = Vec::with_capacity(w * h);
    for row in right_rows {
        right.extend(row?);
    }

    let visibility = Grid::from_vec(w, h, visible)?;
    Ok(StereoFrame {
        left: Image::from_vec(w, h, left)?,
        right: Image::from_vec(w, h, right)?,
        truth: GroundTruth {
            disparity: DisparityMap::new(Grid::from_vec(w, h, disparity)?, visibility.clone())?,
            raw_disparity: Grid::from_vec(w, h, raw)?,
            eta_grid: elevation_grid(spec, &renderer.wave, t),
            visibility,
            on_cylinder: Grid::from_vec(w, h, on_cylinder)?,
        },
    })
}

fn elevation_grid(spec: &SceneSpec, wave: &WaveModel, t: f64) -> ElevationGrid {
    let origin = spec.extent.min();
    let spacing = spec.eta_grid_spacing;
    let nx = (spec.extent.size[0] / spacing).floor() as usize + 1;
    let ny = (spec.extent.size[1] / spacing).floor() as usize + 1;
    let values = Grid::from_fn(nx, ny, |i, j| {
        wave.eta(origin[0] + i as f64 * spacing, origin[1] + j as f64 * spacing, t)
    });
    ElevationGrid {
        origin,
        spacing,
        values,
    }
}

/// Virtual wave probe: `eta[i] = eta(probe, t0 + i / frame_rate)`.
pub fn probe_series(spec: &SceneSpec, probe_xy: [f64; 2], t0: f64, n_frames: usize) -> Result<WaveSeries, SceneError> {
    let [x, y] = probe_xy;
    let inside_cylinder = spec.cylinder.as_ref().is_some_and(|c| {
        let (dx, dy) = (x - c.center[0], y - c.center[1]);
        dx * dx + dy * dy < c.radius * c.radius
    });
    if !spec.extent.contains(x, y) || inside_cylinder {
        return Err(SceneError::ProbeOutsideExtent { x, y });
    }
    let wave = spec.wave_model()?;
    let dt = 1.0 / spec.frame_rate;
    let eta = (0..n_frames).map(|i| wave.eta(x, y, t0 + i as f64 * dt)).collect();
    Ok(WaveSeries::new(t0, dt, eta, "oracle", probe_xy)?)
}

#[cfg(test)]
mod tests;
