use super::*;
use crate::formats::write_pfm;
use crate::scene::{render_stereo_pair, value_noise, SceneSpec};

fn texture(x: f64, y: f64) -> f64 {
    128.0 + 60.0 * value_noise(5, 0, x / 3.0, y / 3.0) + 30.0 * value_noise(5, 1, x / 1.5, y / 1.5)
}

/// Right image equals the left shifted left by `c` pixels.
fn shifted_pair(w: usize, h: usize, c: usize) -> (Image, Image) {
    let left = Image::from_fn(w, h, |u, v| texture(u as f64, v as f64)).unwrap();
    let right = Image::from_fn(w, h, |u, v| texture((u + c) as f64, v as f64)).unwrap();
    (left, right)
}

fn params(d_min: usize, d_max: usize) -> MatchParams {
    MatchParams::new(d_min, d_max)
}

#[test]
fn default_penalties_scale_with_census_bits() {
    assert_eq!(MatchParams::scaled_penalties(5), (3, 36));
    assert_eq!(MatchParams::scaled_penalties(9), (10, 120));
    let p = params(0, 10).with_census_window(7);
    assert_eq!((p.p1, p.p2), (6, 72));
}

#[test]
fn parameter_validation() {
    assert!(params(5, 5).validate().is_err());
    assert!(params(0, 5).with_census_window(4).validate().is_err());
    let mut p = params(0, 5);
    p.p1 = 50;
    assert!(p.validate().is_err());
    p = params(0, 5);
    p.paths = 6;
    assert!(p.validate().is_err());
}

#[test]
fn shifted_pair_has_zero_cost_at_the_shift() {
    let c = 6;
    let (l, r) = shifted_pair(48, 20, c);
    let p = params(2, 12);
    let cost = census_cost_volume(&l, &r, &p).unwrap();
    for v in 2..18 {
        for u in (c + 2)..(48 - 2) {
            assert_eq!(cost.at(u, v, c), 0, "({u},{v})");
        }
    }
}

#[test]
fn identical_and_uniform_images() {
    let (l, _) = shifted_pair(20, 10, 0);
    let cost = census_cost_volume(&l, &l, &params(0, 4)).unwrap();
    for v in 0..10 {
        for u in 0..20 {
            assert_eq!(cost.at(u, v, 0), 0);
        }
    }
    let flat = Image::constant(20, 10, 90.0);
    let cost = census_cost_volume(&flat, &flat, &params(0, 4)).unwrap();
    for v in 0..10 {
        for u in 4..20 {
            assert!((0..=4).all(|d| cost.at(u, v, d) == 0));
            assert!(!cost.informative(u, v));
        }
    }
}

#[test]
fn out_of_image_candidates_cost_the_full_signature() {
    let (l, r) = shifted_pair(20, 6, 0);
    let cost = census_cost_volume(&l, &r, &params(3, 8)).unwrap();
    assert_eq!(cost.at(2, 3, 3), 24);
    assert_eq!(cost.at(5, 3, 7), 24);
}

#[test]
fn dimension_mismatch_is_reported() {
    let a = Image::constant(10, 10, 0.0);
    let b = Image::constant(11, 10, 0.0);
    assert!(matches!(
        census_cost_volume(&a, &b, &params(0, 3)),
        Err(MatchError::DimensionMismatch { .. })
    ));
    assert!(match_pair(&a, &b, &params(0, 3)).is_err());
}

#[test]
fn zero_penalties_sum_raw_costs() {
    let (l, r) = shifted_pair(30, 12, 3);
    let mut p = params(0, 6);
    let cost = census_cost_volume(&l, &r, &p).unwrap();
    for paths in [4u32, 8] {
        p.paths = paths as usize;
        p.p1 = 0;
        p.p2 = 0;
        let agg = sgm_aggregate(&cost, &p);
        for (a, c) in agg.as_slice().iter().zip(cost.as_slice()) {
            assert_eq!(*a, paths * *c as u32);
        }
    }
}

/// Path cost along one row written with an explicit transition penalty.
fn row_dp(costs: &[Vec<u32>], p1: u32, p2: u32) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::new();
    for c in costs {
        let next = match out.last() {
            None => c.clone(),
            Some(prev) => {
                let pmin = *prev.iter().min().unwrap();
                (0..c.len())
                    .map(|d| {
                        let best = (0..c.len())
                            .map(|k| {
                                let pen = match k.abs_diff(d) {
                                    0 => 0,
                                    1 => p1,
                                    _ => p2,
                                };
                                prev[k] + pen
                            })
                            .min()
                            .unwrap();
                        c[d] + best - pmin
                    })
                    .collect()
            }
        };
        out.push(next);
    }
    out
}

#[test]
fn single_row_matches_dynamic_programming_oracle() {
    let (l, r) = shifted_pair(16, 1, 2);
    let mut p = params(0, 5);
    p.paths = 4;
    let cost = census_cost_volume(&l, &r, &p).unwrap();
    let agg = sgm_aggregate(&cost, &p);
    let costs: Vec<Vec<u32>> = (0..16)
        .map(|u| cost.curve(u, 0).iter().map(|&c| c as u32).collect())
        .collect();
    let forward = row_dp(&costs, p.p1, p.p2);
    let mut rev = costs.clone();
    rev.reverse();
    let mut backward = row_dp(&rev, p.p1, p.p2);
    backward.reverse();
    for u in 0..16 {
        for k in 0..6 {
            // the two vertical paths see a single pixel and add the raw cost
            let expected = forward[u][k] + backward[u][k] + 2 * costs[u][k];
            assert_eq!(agg.curve(u, 0)[k], expected, "u={u} k={k}");
        }
    }
}

#[test]
fn aggregation_is_translation_equivariant() {
    let (l, r) = shifted_pair(24, 14, 3);
    let p = params(0, 7);
    let cost = census_cost_volume(&l, &r, &p).unwrap();
    let (ox, oy) = (5, 4);
    let (w, h, n) = (cost.width() + ox + 3, cost.height() + oy + 2, cost.ndisp());
    let mut data = vec![0u16; w * h * n];
    for v in 0..cost.height() {
        for u in 0..cost.width() {
            let dst = ((v + oy) * w + u + ox) * n;
            data[dst..dst + n].copy_from_slice(cost.curve(u, v));
        }
    }
    let padded = Volume {
        width: w,
        height: h,
        d_min: 0,
        ndisp: n,
        data,
        informative: vec![true; w * h],
    };
    let a = sgm_aggregate(&cost, &p);
    let b = sgm_aggregate(&padded, &p);
    for v in 0..cost.height() {
        for u in 0..cost.width() {
            assert_eq!(a.curve(u, v), b.curve(u + ox, v + oy));
        }
    }
}

#[test]
fn constant_shift_is_recovered_exactly() {
    let c = 9;
    let (l, r) = shifted_pair(96, 48, c);
    let mut p = params(0, 20);
    p.subpixel = false;
    let dmap = match_pair(&l, &r, &p).unwrap();
    let (mut total, mut exact) = (0, 0);
    for v in 2..46 {
        for u in (c + 20)..94 {
            total += 1;
            if dmap.get(u, v) == Some(c as f64) {
                exact += 1;
            }
        }
    }
    assert!(exact as f64 >= 0.99 * total as f64, "{exact}/{total}");
}

#[test]
fn uniform_images_are_masked() {
    let flat = Image::constant(64, 32, 77.0);
    let dmap = match_pair(&flat, &flat, &params(0, 16)).unwrap();
    assert!(dmap.valid_count() as f64 <= 0.01 * (64 * 32) as f64);
}

#[test]
fn raising_lr_threshold_never_shrinks_the_mask() {
    let spec = SceneSpec {
        rig: SceneSpec::default_flume().rig.window(150, 200, 200, 48).unwrap(),
        ..SceneSpec::default_flume()
    };
    let frame = render_stereo_pair(&spec, 0.1).unwrap();
    let p = params(40, 96);
    let dl = match_one_way(&frame.left, &frame.right, &p).unwrap();
    let dr = match_one_way(&frame.right.mirrored(), &frame.left.mirrored(), &p)
        .unwrap()
        .mirrored();
    let mut last = 0;
    for thr in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let checked = left_right_check(&dl, &dr, thr);
        let valid: Vec<bool> = checked.as_slice().iter().map(|d| d.is_finite()).collect();
        let count = valid.iter().filter(|b| **b).count();
        assert!(count >= last);
        last = count;
    }
}

#[test]
fn wave_pair_is_matched_within_a_pixel() {
    let spec = SceneSpec {
        rig: SceneSpec::default_flume().rig.window(100, 160, 400, 96).unwrap(),
        ..SceneSpec::default_flume()
    };
    let frame = render_stereo_pair(&spec, 0.3).unwrap();
    let dmap = match_pair(&frame.left, &frame.right, &params(40, 96)).unwrap();
    let mut errors = Vec::new();
    let mut visible = 0;
    for v in 0..96 {
        for u in 0..400 {
            let Some(gt) = frame.truth.disparity.get(u, v) else {
                continue;
            };
            visible += 1;
            if let Some(d) = dmap.get(u, v) {
                errors.push((d - gt).abs());
            }
        }
    }
    let within = errors.iter().filter(|e| **e <= 1.0).count();
    assert!(within as f64 >= 0.9 * visible as f64, "{within}/{visible}");
    errors.sort_by(f64::total_cmp);
    assert!(errors[errors.len() / 2] <= 0.5);
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let (l, r) = shifted_pair(80, 40, 5);
    let p = params(0, 16);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| match_pair(&l, &r, &p).unwrap())
    };
    let a = run(1);
    let b = run(3);
    let bits = |m: &DisparityMap| m.values().as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.mask(), b.mask());
}

#[test]
fn ingest_round_trip_and_masking() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.pfm");
    let mut values = Grid::from_fn(8, 4, |u, v| 40.0 + u as f64 * 0.37 + v as f64);
    *values.get_mut(3, 2) = 96.0 + 10.0;
    write_pfm(&values.map(|&x| x as f32), &path).unwrap();
    let p = params(40, 96);
    let dmap = ingest_external_disparity(&path, (8, 4), &p).unwrap();
    assert_eq!(dmap.get(3, 2), None);
    assert_eq!(dmap.get(5, 1), Some(*values.get(5, 1) as f32 as f64));
    assert_eq!(dmap.valid_count(), 31);

    assert!(matches!(
        ingest_external_disparity(&path, (4, 8), &p),
        Err(MatchError::DimensionMismatch { .. })
    ));
    write_pfm(&Grid::filled(8, 4, f32::NAN), &path).unwrap();
    assert!(matches!(
        ingest_external_disparity(&path, (8, 4), &p),
        Err(MatchError::AllMasked)
    ));
}
