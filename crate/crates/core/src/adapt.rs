//! Stereo training data from a single view: a relative inverse-depth map is
//! remapped to a disparity range, occlusions are found with a column
//! collision test, the left image is forward-warped into a fake right view,
//! and the holes are patched from the real right image. Tuples are exported
//! as PGM/PFM files plus a shuffled manifest for an external fine-tuning run.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{
    disparity_from_pfm, disparity_to_pfm, read_pfm, read_pgm, write_pfm, write_pgm, FormatError, PgmDepth,
};
use crate::model::{DisparityMap, Grid, Image, ModelError};

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("depth map is constant, the disparity range cannot be spanned")]
    DegenerateRange,
    #[error("disparity range [{d_min}, {d_max}] must satisfy 0 < d_min < d_max")]
    InvalidRange { d_min: f64, d_max: f64 },
    #[error("raster dimensions differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn same_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), AdaptError> {
    if a != b {
        return Err(AdaptError::DimensionMismatch { a, b });
    }
    Ok(())
}

/// Min-max normalizes `l` (larger = nearer) onto `[d_min, d_max]`. A
/// constant map is an error unless `constant_fill` is set, in which case
/// every pixel gets `d_min`.
pub fn depth_to_disparity(l: &Image, d_min: f64, d_max: f64, constant_fill: bool) -> Result<DisparityMap, AdaptError> {
    if !(d_min > 0.0 && d_min < d_max && d_max.is_finite()) {
        return Err(AdaptError::InvalidRange { d_min, d_max });
    }
    let px = l.pixels();
    let lo = px.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let values = if hi > lo {
        let span = hi - lo;
        // pin the extremes so rounding can't leave the range
        l.grid().map(|&x| {
            if x == lo {
                d_min
            } else if x == hi {
                d_max
            } else {
                ((x - lo) / span * (d_max - d_min) + d_min).clamp(d_min, d_max)
            }
        })
    } else if constant_fill {
        Grid::filled(l.width(), l.height(), d_min)
    } else {
        return Err(AdaptError::DegenerateRange);
    };
    let mask = Grid::filled(l.width(), l.height(), true);
    Ok(DisparityMap::new(values, mask)?)
}

/// Right-view visibility of each left pixel (true = visible).
///
/// With `Q = u - d`, a pixel is visible when `Q > 0` and no pixel further
/// right in its row has the same `floor(Q)`. Only columns `u < W - 2` are
/// tested for collisions; the last two keep the `Q > 0` test alone.
/// Non-finite disparities are never visible and never collide.
pub fn occlusion_mask(disparity: &Grid<f64>) -> Grid<bool> {
    let (w, h) = disparity.dims();
    let mut out = Grid::filled(w, h, false);
    let mut seen = HashSet::new();
    for v in 0..h {
        seen.clear();
        let row = disparity.row(v);
        for u in (0..w).rev() {
            let q = u as f64 - row[u];
            if !q.is_finite() {
                continue;
            }
            let q_down = q.floor() as i64;
            let collides = u + 2 < w && seen.contains(&q_down);
            *out.get_mut(u, v) = q > 0.0 && !collides;
            seen.insert(q_down);
        }
    }
    out
}

/// Result of splatting a left image into the right view.
#[derive(Debug, Clone, PartialEq)]
pub struct Warp {
    /// Warped intensities; holes hold 0.
    pub image: Image,
    pub holes: Grid<bool>,
    /// Left column that produced each right pixel.
    pub source: Grid<Option<usize>>,
}

/// Splats every left pixel with `mask` set and a finite disparity to
/// column `round(u - d)` of its row. On collisions the larger disparity
/// wins, then the leftmost source.
pub fn forward_warp(left: &Image, disparity: &Grid<f64>, mask: &Grid<bool>) -> Result<Warp, AdaptError> {
    same_dims(left.dims(), disparity.dims())?;
    same_dims(left.dims(), mask.dims())?;
    let (w, h) = left.dims();
    let mut source: Grid<Option<usize>> = Grid::filled(w, h, None);
    for v in 0..h {
        for u in 0..w {
            let d = *disparity.get(u, v);
            if !*mask.get(u, v) || !d.is_finite() {
                continue;
            }
            let target = (u as f64 - d).round();
            if target < 0.0 || target >= w as f64 {
                continue;
            }
            let slot = source.get_mut(target as usize, v);
            match *slot {
                Some(prev) if *disparity.get(prev, v) >= d => {}
                _ => *slot = Some(u),
            }
        }
    }
    let image = Image::from_fn(w, h, |u, v| source.get(u, v).map_or(0.0, |s| left.at(s, v)));
    let holes = source.map(Option::is_none);
    Ok(Warp {
        image: image?,
        holes,
        source,
    })
}

/// Copies hole pixels from the real right image.
pub fn fill_holes(warped: &Image, holes: &Grid<bool>, real_right: &Image) -> Result<Image, AdaptError> {
    same_dims(warped.dims(), holes.dims())?;
    same_dims(warped.dims(), real_right.dims())?;
    Ok(Image::from_fn(warped.width(), warped.height(), |u, v| {
        if *holes.get(u, v) {
            real_right.at(u, v)
        } else {
            warped.at(u, v)
        }
    })?)
}

/// One synthesized training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTuple {
    pub left: Image,
    pub right_fake: Image,
    pub disparity: DisparityMap,
    /// True where the left pixel is visible in the right view.
    pub visible: Grid<bool>,
}

/// Depth remap, occlusion mask, forward warp and hole fill in one go.
pub fn synthesize_tuple(
    left: &Image,
    real_right: &Image,
    l: &Image,
    d_min: f64,
    d_max: f64,
    constant_fill: bool,
) -> Result<TrainingTuple, AdaptError> {
    same_dims(left.dims(), real_right.dims())?;
    same_dims(left.dims(), l.dims())?;
    let disparity = depth_to_disparity(l, d_min, d_max, constant_fill)?;
    let visible = occlusion_mask(disparity.values());
    let warp = forward_warp(left, disparity.values(), &visible)?;
    let right_fake = fill_holes(&warp.image, &warp.holes, real_right)?;
    Ok(TrainingTuple {
        left: left.clone(),
        right_fake,
        disparity,
        visible,
    })
}

/// Fine-tuning settings recorded next to the exported tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub max_iterations: usize,
    /// Random-crop size as `[height, width]`.
    pub crop: [usize; 2],
    pub shuffle_seed: u64,
    pub pretrained_init: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 2,
            max_iterations: 20_000,
            crop: [320, 512],
            shuffle_seed: 0,
            pretrained_init: true,
        }
    }
}

impl TrainingConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            shuffle_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self, image_dims: (usize, usize)) -> Result<(), AdaptError> {
        if self.batch_size == 0 || self.max_iterations == 0 {
            return Err(AdaptError::InvalidManifest(
                "batch size and iteration count must be at least 1".into(),
            ));
        }
        let (w, h) = image_dims;
        if self.crop[0] == 0 || self.crop[1] == 0 || self.crop[0] > h || self.crop[1] > w {
            return Err(AdaptError::InvalidManifest(format!(
                "crop {}x{} does not fit {w}x{h} images",
                self.crop[0], self.crop[1]
            )));
        }
        Ok(())
    }
}

/// File names of one exported tuple, relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleFiles {
    pub left: String,
    pub right_fake: String,
    pub disparity: String,
    pub occlusion: String,
}

impl TupleFiles {
    fn numbered(index: usize) -> Self {
        Self {
            left: format!("{index:04}_left.pgm"),
            right_fake: format!("{index:04}_right_fake.pgm"),
            disparity: format!("{index:04}_disp.pfm"),
            occlusion: format!("{index:04}_occ.pgm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptManifest {
    /// Tuples in training order (already shuffled).
    pub tuples: Vec<TupleFiles>,
    #[serde(flatten)]
    pub config: TrainingConfig,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Eight bits when every sample is an integer code, sixteen otherwise.
fn pgm_depth_for(image: &Image) -> PgmDepth {
    if image
        .pixels()
        .iter()
        .all(|x| x.fract() == 0.0 && (0.0..=255.0).contains(x))
    {
        PgmDepth::Eight
    } else {
        PgmDepth::Sixteen
    }
}

fn mask_image(mask: &Grid<bool>) -> Image {
    Image::new(mask.map(|&m| if m { 255.0 } else { 0.0 })).expect("finite")
}

/// Writes every tuple as `NNNN_*` files and a `manifest.json` listing them
/// in an order shuffled by `config.shuffle_seed`.
pub fn export_dataset(
    tuples: &[TrainingTuple],
    out_dir: &Path,
    config: &TrainingConfig,
) -> Result<AdaptManifest, AdaptError> {
    let first = tuples.first().ok_or(AdaptError::EmptyDataset)?;
    for t in tuples {
        same_dims(first.left.dims(), t.left.dims())?;
    }
    config.validate(first.left.dims())?;
    std::fs::create_dir_all(out_dir).map_err(|source| FormatError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let files = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| write_tuple(t, i, out_dir))
        .collect::<Result<Vec<_>, _>>()?;
    write_manifest(files, out_dir, config)
}

/// Writes one tuple under its numbered names. Lets callers stream large
/// datasets instead of holding every tuple for [`export_dataset`].
pub fn write_tuple(t: &TrainingTuple, index: usize, out_dir: &Path) -> Result<TupleFiles, AdaptError> {
    let names = TupleFiles::numbered(index);
    write_pgm(&t.left, pgm_depth_for(&t.left), &out_dir.join(&names.left))?;
    write_pgm(
        &t.right_fake,
        pgm_depth_for(&t.right_fake),
        &out_dir.join(&names.right_fake),
    )?;
    write_pfm(&disparity_to_pfm(&t.disparity), &out_dir.join(&names.disparity))?;
    write_pgm(
        &mask_image(&t.visible),
        PgmDepth::Eight,
        &out_dir.join(&names.occlusion),
    )?;
    Ok(names)
}

/// Shuffles the tuple list with the configured seed and writes the manifest.
pub fn write_manifest(
    mut files: Vec<TupleFiles>,
    out_dir: &Path,
    config: &TrainingConfig,
) -> Result<AdaptManifest, AdaptError> {
    if files.is_empty() {
        return Err(AdaptError::EmptyDataset);
    }
    files.shuffle(&mut ChaCha8Rng::seed_from_u64(config.shuffle_seed));
    let manifest = AdaptManifest {
        tuples: files,
        config: config.clone(),
    };
    let path = out_dir.join(MANIFEST_NAME);
    let json = serde_json::to_vec_pretty(&manifest).map_err(|source| AdaptError::Json {
        path: path.clone(),
        source,
    })?;
    crate::formats::write_bytes(&path, &json)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<AdaptManifest, AdaptError> {
    let path = dir.join(MANIFEST_NAME);
    let bytes = crate::formats::read_bytes(&path)?;
    serde_json::from_slice(&bytes).map_err(|source| AdaptError::Json { path, source })
}

/// Loads one exported tuple back.
pub fn read_tuple(dir: &Path, files: &TupleFiles) -> Result<TrainingTuple, AdaptError> {
    let left = read_pgm(&dir.join(&files.left))?;
    let right_fake = read_pgm(&dir.join(&files.right_fake))?;
    let disparity = disparity_from_pfm(&read_pfm(&dir.join(&files.disparity))?);
    let visible = read_pgm(&dir.join(&files.occlusion))?.grid().map(|&x| x > 127.5);
    same_dims(left.dims(), right_fake.dims())?;
    same_dims(left.dims(), disparity.dims())?;
    same_dims(left.dims(), visible.dims())?;
    Ok(TrainingTuple {
        left,
        right_fake,
        disparity,
        visible,
    })
}
