//! Stereo reconstruction of water-wave surfaces from rectified image pairs.
//!
//! The crate covers the whole measurement chain:
//!
//! * [`model`] and [`formats`]: rasters, rigs, clouds, series and their files
//! * [`geometry`]: rectified triangulation
//! * [`scene`]: a synthetic thermal wave-flume renderer with exact ground truth
//! * [`matcher`]: census + semi-global matching, external disparity ingestion
//! * [`adapt`]: stereo training-data synthesis from a single view plus a
//!   relative inverse-depth map (occlusion masks, forward warping, export)
//! * [`reconstruct`]: point clouds, RANSAC plane metrology, probe series and
//!   wave statistics
//! * [`metrics`]: photometric reprojection with SSIM, PSNR, MSE and modified
//!   Hausdorff distance
//! * [`budget`]: closed-form quantization error propagation

pub mod adapt;
pub mod budget;
pub mod formats;
pub mod geometry;
pub mod matcher;
pub mod metrics;
pub mod model;
pub mod reconstruct;
pub mod scene;

pub use model::{DisparityMap, Frame, Grid, Image, ModelError, Plane, PointCloud, StereoRig, WaveSeries};
