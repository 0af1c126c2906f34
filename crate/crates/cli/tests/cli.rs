use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use wavestereo::formats::{read_series_csv, write_pfm, write_pgm, PgmDepth};
use wavestereo::{Grid, Image};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavestereo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {:?}", out.stderr))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn texture(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |u, v| ((u * 37 + v * 91 + u * v) % 251) as f64).unwrap()
}

#[test]
fn missing_input_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.pgm");
    let out = run(&[
        "eval",
        "--left",
        s(&missing),
        "--right",
        s(&missing),
        "--disp",
        s(&missing),
        "--out",
        s(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "FileNotFound");
    assert_eq!(err["path"], s(&missing));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&["budget", "--z-min", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "Usage");
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn eval_of_identical_views_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let img = texture(48, 40);
    let (left, right, disp) = (
        dir.path().join("l.pgm"),
        dir.path().join("r.pgm"),
        dir.path().join("d.pfm"),
    );
    write_pgm(&img, PgmDepth::Eight, &left).unwrap();
    write_pgm(&img, PgmDepth::Eight, &right).unwrap();
    write_pfm(&Grid::filled(48, 40, 0.0f32), &disp).unwrap();
    let report_path = dir.path().join("report.json");
    let out = ok(&[
        "eval",
        "--left",
        s(&left),
        "--right",
        s(&right),
        "--disp",
        s(&disp),
        "--out",
        s(&report_path),
    ]);
    let report = read_json(&report_path);
    assert_eq!(report["ssim"], 1.0);
    assert_eq!(report["mse"], 0.0);
    assert_eq!(report["psnr"], "inf");
    assert_eq!(report["hd"], 0.0);
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, report);
    let echo = read_json(&dir.path().join("report.json.run_config.json"));
    assert_eq!(echo["args"]["command"], "eval");
}

#[test]
fn budget_table_and_range_check() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("synth");
    ok(&[
        "synth",
        "--out",
        s(&frames),
        "--frames",
        "1",
        "--window",
        "300,240,40,32",
    ]);
    let csv = dir.path().join("budget.csv");
    ok(&[
        "budget",
        "--calib",
        s(&frames.join("calib.json")),
        "--z-min",
        "0.5",
        "--z-max",
        "1.0",
        "--n",
        "6",
        "--out",
        s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "z,e_x,e_y,e_z,e_xw,e_yw,e_zw");
    assert_eq!(lines.len(), 7);
    let bad = run(&[
        "budget",
        "--calib",
        s(&frames.join("calib.json")),
        "--z-min",
        "1.0",
        "--z-max",
        "0.5",
        "--out",
        s(&csv),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(stderr_json(&bad)["error"], "InvalidArgument");
}

#[test]
fn match_output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("synth");
    ok(&[
        "synth",
        "--out",
        s(&frames),
        "--frames",
        "2",
        "--window",
        "200,200,160,64",
    ]);
    let outputs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|threads| {
            let out = dir.path().join(format!("disp{threads}"));
            ok(&[
                "match",
                "--threads",
                threads,
                "--input-dir",
                s(&frames),
                "--out",
                s(&out),
                "--d-min",
                "40",
                "--d-max",
                "96",
            ]);
            ["0000_disp.pfm", "0001_disp.pfm"]
                .iter()
                .flat_map(|f| std::fs::read(out.join(f)).unwrap())
                .collect()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    let bad = run(&[
        "match",
        "--input-dir",
        s(&frames),
        "--out",
        s(&dir.path().join("x")),
        "--d-min",
        "50",
        "--d-max",
        "40",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn adapt_writes_a_shuffled_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pairs");
    let depth = dir.path().join("depth");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::create_dir_all(&depth).unwrap();
    for i in 0..3 {
        write_pgm(
            &texture(64, 48),
            PgmDepth::Eight,
            &data.join(format!("{i:02}_left.pgm")),
        )
        .unwrap();
        write_pgm(
            &texture(64, 48),
            PgmDepth::Eight,
            &data.join(format!("{i:02}_right.pgm")),
        )
        .unwrap();
        let l = Grid::from_fn(64, 48, |u, v| (u + v + i) as f32);
        write_pfm(&l, &depth.join(format!("{i:02}.pfm"))).unwrap();
    }
    let out = dir.path().join("train");
    let args = |out: &Path| {
        vec![
            "adapt".to_string(),
            "--dataset-dir".into(),
            s(&data).into(),
            "--depth-dir".into(),
            s(&depth).into(),
            "--d-min".into(),
            "5".into(),
            "--d-max".into(),
            "20".into(),
            "--seed".into(),
            "9".into(),
            "--crop-height".into(),
            "32".into(),
            "--crop-width".into(),
            "48".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let a: Vec<String> = args(&out);
    ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["tuples"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["batch_size"], 2);
    assert_eq!(manifest["max_iterations"], 20000);
    assert_eq!(manifest["shuffle_seed"], 9);
    for t in manifest["tuples"].as_array().unwrap() {
        for key in ["left", "right_fake", "disparity", "occlusion"] {
            assert!(out.join(t[key].as_str().unwrap()).is_file());
        }
    }
    let again = dir.path().join("train2");
    let b: Vec<String> = args(&again);
    ok(&b.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(
        std::fs::read(out.join("manifest.json")).unwrap(),
        std::fs::read(again.join("manifest.json")).unwrap()
    );

    std::fs::remove_file(depth.join("01.pfm")).unwrap();
    let c: Vec<String> = args(&dir.path().join("train3"));
    let missing = run(&c.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(stderr_json(&missing)["error"], "FileNotFound");
}

#[test]
fn synth_match_reconstruct_series_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let window = "130,216,256,80";

    // still-water reference for the plane fit
    ok(&["synth", "--out", s(&p("still")), "--frames", "1", "--window", window]);
    let mut scene = read_json(&p("still").join("scene.json"));
    scene["flat"] = Value::Bool(true);
    std::fs::write(p("still.json"), serde_json::to_vec(&scene).unwrap()).unwrap();
    // the window in scene.json is already applied
    ok(&[
        "synth",
        "--scene",
        s(&p("still.json")),
        "--out",
        s(&p("flat")),
        "--frames",
        "1",
    ]);

    let probe = read_series_csv(&{
        ok(&["synth", "--out", s(&p("waves")), "--frames", "30", "--window", window]);
        p("waves").join("probe.csv")
    })
    .unwrap();
    let flat_scene = read_json(&p("flat").join("scene.json"));
    assert_eq!(flat_scene["flat"], true);

    for (src, dst) in [("flat", "flat_disp"), ("waves", "wave_disp")] {
        ok(&[
            "match",
            "--input-dir",
            s(&p(src)),
            "--out",
            s(&p(dst)),
            "--d-min",
            "40",
            "--d-max",
            "96",
        ]);
    }
    ok(&[
        "reconstruct",
        "--disp-dir",
        s(&p("wave_disp")),
        "--calib",
        s(&p("waves").join("calib.json")),
        "--reference",
        s(&p("flat_disp").join("0000_disp.pfm")),
        "--images-dir",
        s(&p("waves")),
        "--out",
        s(&p("recon")),
    ]);
    let deviation = read_json(&p("recon").join("deviation.json"));
    let std = deviation["summary"]["std"].as_f64().unwrap();
    // a narrow strip is noisier than the full-frame metrology check
    assert!(std < 0.003, "deviation std {std}");
    assert_eq!(std::fs::read_dir(p("recon").join("clouds")).unwrap().count(), 30);

    let xy = format!("{},{}", probe.probe_xy()[0], probe.probe_xy()[1]);
    ok(&[
        "series",
        "--cloud-dir",
        s(&p("recon").join("clouds")),
        "--probe",
        &xy,
        "--reference",
        s(&p("waves").join("probe.csv")),
        "--out",
        s(&p("series")),
    ]);
    let stereo = read_series_csv(&p("series").join("series.csv")).unwrap();
    assert_eq!(stereo.eta().len(), 30);
    let worst = stereo
        .eta()
        .iter()
        .zip(probe.eta())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 2e-3, "worst {worst}");
    let stats = read_json(&p("series").join("stats.json"));
    assert!(stats["fit"]["r_squared"].as_f64().unwrap() > 0.98);
    for d in ["still", "flat", "waves", "flat_disp", "wave_disp", "recon", "series"] {
        assert!(p(d).join("run_config.json").is_file(), "{d}");
    }
}
