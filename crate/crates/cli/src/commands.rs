use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use wavestereo::adapt::{synthesize_tuple, write_manifest, write_tuple, TrainingConfig};
use wavestereo::budget::{budget_table, encode_budget_csv};
use wavestereo::formats::{
    disparity_from_pfm, disparity_to_pfm, image_from_pfm, read_calibration, read_pfm, read_pgm, read_ply,
    read_series_csv, write_calibration, write_pfm, write_pgm, write_ply, write_series_csv, PgmDepth, PlyEncoding,
};
use wavestereo::matcher::{match_pair, MatchParams};
use wavestereo::metrics::evaluate_values;
use wavestereo::reconstruct::{
    deviation_map, disparity_to_cloud, extract_probe_series, linear_fit_bias, r_squared, ransac_plane,
    world_frame_from_plane, zero_crossing_stats, GridSpec, RansacParams,
};
use wavestereo::scene::{probe_series, render_stereo_pair, SceneSpec};
use wavestereo::{DisparityMap, Frame, Grid, Image, PointCloud, StereoRig};

use crate::error::CliError;
use crate::{AdaptArgs, BudgetArgs, Command, EvalArgs, MatchArgs, ReconstructArgs, SeriesArgs, SynthArgs};

pub const RUN_CONFIG: &str = "run_config.json";

/// Everything needed to repeat a run. Only `started_unix` varies between
/// identical invocations.
#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    tool: &'static str,
    version: &'static str,
    threads: usize,
    started_unix: u64,
    args: Value,
}

impl ConfigEcho {
    pub fn new(command: &Command, threads: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            threads,
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            args: serde_json::to_value(command).unwrap_or(Value::Null),
        }
    }

    /// Directory outputs get `run_config.json` inside; file outputs get a
    /// `<file>.run_config.json` sibling.
    fn write_in(&self, dir: &Path) -> Result<(), CliError> {
        write_json(&dir.join(RUN_CONFIG), self)
    }

    fn write_beside(&self, file: &Path) -> Result<(), CliError> {
        let mut name = file.as_os_str().to_owned();
        name.push(".");
        name.push(RUN_CONFIG);
        write_json(Path::new(&name), self)
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::not_found(path))
    }
}

fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::not_found(path))
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        error: "IoError",
        path: Some(path.to_path_buf()),
        message: e.to_string(),
        code: crate::error::EXIT_COMPUTATION,
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn create_parent(file: &Path) -> Result<(), CliError> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::computation(e.to_string()))?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    require_file(path)?;
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(path, e.to_string()))
}

/// Files in `dir` whose names end in `suffix`, as `(stem, path)` sorted by
/// name, where the stem is the name with the suffix removed.
fn list_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>, CliError> {
    require_dir(dir)?;
    let mut out = vec![];
    for entry in std::fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(stem) = name.strip_suffix(suffix) {
            if path.is_file() {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn probe_arg(values: &[f64]) -> Result<[f64; 2], CliError> {
    match values {
        [x, y] if x.is_finite() && y.is_finite() => Ok([*x, *y]),
        _ => Err(CliError::usage("probe must be two finite numbers x,y")),
    }
}

pub fn synth(a: &SynthArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    let mut spec = match &a.scene {
        Some(path) => read_json::<SceneSpec>(path)?,
        None => SceneSpec::default_flume(),
    };
    spec.validate()?;
    if a.frames == 0 {
        return Err(CliError::usage("frames must be at least 1"));
    }
    if !a.t0.is_finite() {
        return Err(CliError::usage("t0 must be finite"));
    }
    let probe = match &a.probe {
        Some(p) => probe_arg(p)?,
        None => spec.principal_footprint(),
    };
    if let Some(w) = &a.window {
        if w.len() != 4 {
            return Err(CliError::usage("window must be x0,y0,width,height"));
        }
        spec.rig = spec.rig.window(w[0], w[1], w[2], w[3])?;
    }
    // fail on a bad probe before rendering anything
    let truth = probe_series(&spec, probe, a.t0, a.frames)?;

    create_dir(&a.out)?;
    echo.write_in(&a.out)?;
    write_json(&a.out.join("scene.json"), &spec)?;
    write_calibration(&spec.rig, &a.out.join("calib.json"))?;
    (0..a.frames)
        .into_par_iter()
        .try_for_each(|i| -> Result<(), CliError> {
            let frame = render_stereo_pair(&spec, a.t0 + i as f64 / spec.frame_rate)?;
            write_pgm(&frame.left, PgmDepth::Eight, &a.out.join(format!("{i:04}_left.pgm")))?;
            write_pgm(&frame.right, PgmDepth::Eight, &a.out.join(format!("{i:04}_right.pgm")))?;
            write_pfm(
                &disparity_to_pfm(&frame.truth.disparity),
                &a.out.join(format!("{i:04}_disp.pfm")),
            )?;
            Ok(())
        })?;
    write_series_csv(&truth, &a.out.join("probe.csv"))?;
    Ok(())
}

fn match_params(a: &MatchArgs) -> Result<MatchParams, CliError> {
    let params = match &a.params {
        Some(path) => read_json::<MatchParams>(path)?,
        None => {
            let (Some(d_min), Some(d_max)) = (a.d_min, a.d_max) else {
                return Err(CliError::usage("--d-min and --d-max are required without --params"));
            };
            let mut p = MatchParams::new(d_min, d_max).with_census_window(a.census_window);
            p.paths = a.paths;
            p.lr_threshold = a.lr_threshold;
            p.subpixel = !a.no_subpixel;
            p
        }
    };
    params.validate()?;
    Ok(params)
}

fn match_one(left: &Path, right: &Path, out: &Path, params: &MatchParams) -> Result<(), CliError> {
    let (l, r) = (read_pgm(left)?, read_pgm(right)?);
    let dmap = match_pair(&l, &r, params)?;
    write_pfm(&disparity_to_pfm(&dmap), out)?;
    Ok(())
}

pub fn match_pairs(a: &MatchArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    let params = match_params(a)?;
    if let (Some(left), Some(right)) = (&a.left, &a.right) {
        require_file(left)?;
        require_file(right)?;
        create_parent(&a.out)?;
        echo.write_beside(&a.out)?;
        return match_one(left, right, &a.out, &params);
    }
    let dir = a
        .input_dir
        .as_ref()
        .ok_or_else(|| CliError::usage("need --left/--right or --input-dir"))?;
    let pairs = list_with_suffix(dir, "_left.pgm")?;
    if pairs.is_empty() {
        return Err(CliError::input(dir, "no *_left.pgm files"));
    }
    for (stem, _) in &pairs {
        require_file(&dir.join(format!("{stem}_right.pgm")))?;
    }
    create_dir(&a.out)?;
    echo.write_in(&a.out)?;
    pairs.par_iter().try_for_each(|(stem, left)| {
        let right = dir.join(format!("{stem}_right.pgm"));
        match_one(left, &right, &a.out.join(format!("{stem}_disp.pfm")), &params)
    })
}

fn read_relative_depth(depth_dir: &Path, stem: &str) -> Result<Image, CliError> {
    let pfm = depth_dir.join(format!("{stem}.pfm"));
    if pfm.is_file() {
        return image_from_pfm(&read_pfm(&pfm)?).map_err(|e| CliError::input(&pfm, e.to_string()));
    }
    let pgm = depth_dir.join(format!("{stem}.pgm"));
    if pgm.is_file() {
        return Ok(read_pgm(&pgm)?);
    }
    Err(CliError::not_found(pfm))
}

pub fn adapt(a: &AdaptArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    if !(a.d_min.is_finite() && a.d_max.is_finite() && 0.0 < a.d_min && a.d_min < a.d_max) {
        return Err(CliError::usage("need 0 < d_min < d_max"));
    }
    require_dir(&a.depth_dir)?;
    let lefts = list_with_suffix(&a.dataset_dir, "_left.pgm")?;
    if lefts.is_empty() {
        return Err(CliError::input(&a.dataset_dir, "no *_left.pgm files"));
    }
    for (stem, _) in &lefts {
        require_file(&a.dataset_dir.join(format!("{stem}_right.pgm")))?;
        let (pfm, pgm) = (
            a.depth_dir.join(format!("{stem}.pfm")),
            a.depth_dir.join(format!("{stem}.pgm")),
        );
        if !pfm.is_file() && !pgm.is_file() {
            return Err(CliError::not_found(pfm));
        }
    }
    let config = TrainingConfig {
        batch_size: a.batch_size,
        max_iterations: a.iterations,
        crop: [a.crop_height, a.crop_width],
        shuffle_seed: a.seed,
        pretrained_init: !a.no_pretrained,
    };
    config.validate(read_pgm(&lefts[0].1)?.dims())?;
    create_dir(&a.out)?;
    echo.write_in(&a.out)?;
    let files = lefts
        .par_iter()
        .enumerate()
        .map(|(i, (stem, left_path))| {
            let left = read_pgm(left_path)?;
            let right = read_pgm(&a.dataset_dir.join(format!("{stem}_right.pgm")))?;
            let depth = read_relative_depth(&a.depth_dir, stem)?;
            if left.dims() != right.dims() || left.dims() != depth.dims() {
                return Err(CliError::input(left_path, "left, right and depth sizes differ"));
            }
            let tuple = synthesize_tuple(&left, &right, &depth, a.d_min, a.d_max, a.constant_fill)?;
            Ok(write_tuple(&tuple, i, &a.out)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_manifest(files, &a.out, &config)?;
    Ok(())
}

fn load_disparity(path: &Path, rig: &StereoRig) -> Result<DisparityMap, CliError> {
    let grid = read_pfm(path)?;
    if grid.dims() != (rig.width(), rig.height()) {
        return Err(CliError::input(
            path,
            format!(
                "disparity is {:?} but the calibration sensor is {:?}",
                grid.dims(),
                (rig.width(), rig.height())
            ),
        ));
    }
    Ok(disparity_from_pfm(&grid))
}

fn disparity_stem(file_stem: &str) -> &str {
    file_stem.strip_suffix("_disp").unwrap_or(file_stem)
}

pub fn reconstruct(a: &ReconstructArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    require_file(&a.calib)?;
    let rig = read_calibration(&a.calib)?;
    let disps = list_with_suffix(&a.disp_dir, ".pfm")?;
    if disps.is_empty() {
        return Err(CliError::input(&a.disp_dir, "no .pfm files"));
    }
    if let Some(r) = &a.reference {
        require_file(r)?;
    }
    if let Some(d) = &a.images_dir {
        require_dir(d)?;
    }
    if !(a.cell.is_finite() && a.cell > 0.0) {
        return Err(CliError::usage("cell must be > 0"));
    }
    let params = RansacParams {
        inlier_threshold: a.inlier_threshold,
        iterations: a.iterations,
        min_inlier_fraction: a.min_inlier_fraction,
        seed: a.seed,
    };
    params.validate()?;

    let blank = Image::constant(rig.width(), rig.height(), 0.0);
    let reference = load_disparity(a.reference.as_ref().unwrap_or(&disps[0].1), &rig)?;
    let cam = disparity_to_cloud(&reference, &blank, &rig, Frame::Camera);
    let fit = ransac_plane(&cam, &params)?;
    let grid =
        GridSpec::covering(&cam, a.cell).ok_or_else(|| CliError::computation("reference has no valid disparity"))?;
    let dev = deviation_map(&cam, &fit.plane, &grid)?;
    let world = world_frame_from_plane(&fit.plane, &rig)?;

    create_dir(&a.out.join("clouds"))?;
    echo.write_in(&a.out)?;
    write_calibration(&world, &a.out.join("world_calib.json"))?;
    let n = fit.plane.normal();
    write_json(
        &a.out.join("plane.json"),
        &json!({
            "frame": "camera",
            "normal": [n.x, n.y, n.z],
            "offset": fit.plane.offset(),
            "inlier_rms": fit.inlier_rms,
            "inlier_count": fit.inlier_count(),
            "point_count": cam.len(),
        }),
    )?;
    write_json(
        &a.out.join("deviation.json"),
        &json!({ "summary": dev.summary, "grid": dev.grid }),
    )?;
    write_pfm(&dev.values.map(|&x| x as f32), &a.out.join("deviation.pfm"))?;

    let encoding = if a.ascii {
        PlyEncoding::Ascii
    } else {
        PlyEncoding::BinaryLittleEndian
    };
    disps.par_iter().try_for_each(|(name, path)| {
        let stem = disparity_stem(name);
        let dmap = load_disparity(path, &rig)?;
        let image = match &a.images_dir {
            Some(dir) => read_pgm(&dir.join(format!("{stem}_left.pgm")))?,
            None => blank.clone(),
        };
        if image.dims() != dmap.dims() {
            return Err(CliError::input(path, "image and disparity sizes differ"));
        }
        let cloud = disparity_to_cloud(&dmap, &image, &world, Frame::World);
        write_ply(&cloud, encoding, &a.out.join("clouds").join(format!("{stem}.ply")))?;
        Ok(())
    })
}

/// Points within `radius` of `probe` horizontally; keeps memory flat for
/// long full-frame sequences.
fn near_probe(cloud: &PointCloud, probe: [f64; 2], radius: f64) -> Result<PointCloud, CliError> {
    let r2 = radius * radius;
    let keep: Vec<usize> = (0..cloud.len())
        .filter(|&i| {
            let p = cloud.points()[i];
            (p.x - probe[0]).powi(2) + (p.y - probe[1]).powi(2) <= r2
        })
        .collect();
    let points = keep.iter().map(|&i| cloud.points()[i]).collect();
    let intensity = if cloud.intensity().is_empty() {
        vec![]
    } else {
        keep.iter().map(|&i| cloud.intensity()[i]).collect()
    };
    Ok(PointCloud::new(points, intensity, cloud.frame())?)
}

pub fn series(a: &SeriesArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    let probe = probe_arg(&a.probe)?;
    if !(a.radius.is_finite() && a.radius > 0.0) || !(a.rate.is_finite() && a.rate > 0.0) {
        return Err(CliError::usage("radius and rate must be > 0"));
    }
    let files = list_with_suffix(&a.cloud_dir, ".ply")?;
    if files.is_empty() {
        return Err(CliError::input(&a.cloud_dir, "no .ply files"));
    }
    let reference = match &a.reference {
        Some(path) => {
            require_file(path)?;
            Some(read_series_csv(path)?)
        }
        None => None,
    };
    let clouds = files
        .par_iter()
        .map(|(_, path)| near_probe(&read_ply(path)?, probe, a.radius))
        .collect::<Result<Vec<_>, CliError>>()?;
    let extraction = extract_probe_series(&clouds, probe, a.radius, a.rate, a.t0)?;
    let stereo = extraction.series;

    let mut report = json!({
        "frames": stereo.eta().len(),
        "gaps": extraction.gaps,
        "stats": zero_crossing_stats(&stereo).ok(),
    });
    if let Some(reference) = &reference {
        let n = stereo.eta().len().min(reference.eta().len());
        let (s, p) = (&stereo.eta()[..n], &reference.eta()[..n]);
        let fit = linear_fit_bias(s, p)?;
        let r2 = r_squared(s, p)?;
        let ref_stats = zero_crossing_stats(reference).ok();
        report["reference_stats"] = json!(ref_stats);
        report["fit"] = json!({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "mean_bias_percent": fit.mean_bias_percent,
            "r_squared": r2,
            "samples": n,
        });
        if let (Some(st), Some(rs)) = (zero_crossing_stats(&stereo).ok(), ref_stats) {
            report["h_bar_error_percent"] = json!(100.0 * (st.h_bar - rs.h_bar).abs() / rs.h_bar);
            report["t_bar_error_percent"] = json!(100.0 * (st.t_bar - rs.t_bar).abs() / rs.t_bar);
        }
    }
    create_dir(&a.out)?;
    echo.write_in(&a.out)?;
    write_series_csv(&stereo, &a.out.join("series.csv"))?;
    write_json(&a.out.join("stats.json"), &report)
}

pub fn eval(a: &EvalArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    for p in [&a.left, &a.right, &a.disp] {
        require_file(p)?;
    }
    let (left, right) = (read_pgm(&a.left)?, read_pgm(&a.right)?);
    let disparity: Grid<f64> = read_pfm(&a.disp)?.map(|&x| if x.is_finite() { x as f64 } else { f64::NAN });
    let report = evaluate_values(&left, &right, &disparity)?;
    create_parent(&a.out)?;
    echo.write_beside(&a.out)?;
    write_json(&a.out, &report)?;
    println!(
        "{}",
        serde_json::to_string(&report).map_err(|e| CliError::computation(e.to_string()))?
    );
    Ok(())
}

pub fn budget(a: &BudgetArgs, echo: &ConfigEcho) -> Result<(), CliError> {
    require_file(&a.calib)?;
    let rig = read_calibration(&a.calib)?;
    let rows = budget_table(&rig, a.z_min, a.z_max, a.n, a.e)?;
    create_parent(&a.out)?;
    echo.write_beside(&a.out)?;
    write_file(&a.out, &encode_budget_csv(&rows)?)
}
