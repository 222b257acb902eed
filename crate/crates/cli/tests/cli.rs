use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ggd_core::image::save_image;
use ggd_core::pipeline::smooth_synthetic;

fn ggd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ggd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_synthetic(dir: &Path, name: &str, side: usize) -> String {
    let path = dir.join(name);
    save_image(&smooth_synthetic(side, side), &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn noise_spec_round_trip_reproduces_image() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_synthetic(dir.path(), "clean.pgm", 20);
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();

    let out = ggd(&[
        "noise", "--input", &clean, "--family", "speckle", "--k", "30", "--seed", "5", "--out", &p("a.pgm"),
        "--emit-spec", &p("spec.txt"),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("family=speckle"));
    let spec = fs::read_to_string(p("spec.txt")).unwrap();
    assert!(spec.contains("rule = multiplicative"));

    let out = ggd(&["noise", "--input", &clean, "--spec", &p("spec.txt"), "--out", &p("b.pgm")]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(fs::read(p("a.pgm")).unwrap(), fs::read(p("b.pgm")).unwrap());
}

#[test]
fn noise_needs_family_and_level_or_spec() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_synthetic(dir.path(), "clean.pgm", 8);
    let out = ggd(&["noise", "--input", &clean, "--family", "gaussian", "--out", "x.pgm"]);
    assert!(!out.status.success());
}

#[test]
fn denoise_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_synthetic(dir.path(), "clean.pgm", 16);
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    assert!(ggd(&["noise", "--input", &clean, "--family", "gaussian", "--k", "30", "--out", &p("noisy.pgm")])
        .status
        .success());

    let out = ggd(&[
        "denoise", "--input", &p("noisy.pgm"), "--rho", "3", "--delta", "5", "--eigvecs", "20",
        "--solver", "krylov", "--out", &p("den.pgm"),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).trim(), "L_requested=20 L_effective=20");

    let out = ggd(&["metrics", "--ref", &clean, "--test", &p("den.pgm")]);
    let line = stdout(&out);
    assert!(line.starts_with("psnr_db=") && line.contains(" ssim=") && line.contains(" rmse="));

    let out = ggd(&["metrics", "--ref", &clean, "--test", &clean, "--format", "csv"]);
    assert_eq!(stdout(&out).trim(), "inf,1.000000,0.0000");
}

#[test]
fn lifted_projection_reports_clamp() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_synthetic(dir.path(), "clean.pgm", 12);
    let out_path = dir.path().join("den.pgm");
    let out = ggd(&[
        "denoise", "--input", &clean, "--rho", "3", "--delta", "4", "--eigvecs", "30", "--projection",
        "lifted", "--geodesic", "floyd", "--gram", "literal", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let effective: usize = stdout(&out)
        .trim()
        .rsplit('=')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(effective <= 9);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_synthetic(dir.path(), "clean.pgm", 8);
    let out = ggd(&["denoise", "--input", &clean, "--rho", "4", "--delta", "3", "--eigvecs", "2", "--out", "x.pgm"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));

    let out = ggd(&["metrics", "--ref", "nope.pgm", "--test", &clean]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn bench_writes_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path(), "tiny.pgm", 14);
    let cfg = dir.path().join("grid.cfg");
    fs::write(
        &cfg,
        "images = tiny.pgm\nfamilies = uniform\nk_levels = 30\nseed = 3\ndraws = 2\nparams.30 = 4, 3, 10\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = ggd(&["bench", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "image,family,k_target_pct,k_realized_pct,rho,delta,L_requested,L_effective,psnr_db,ssim,runtime_ms,seed,status"
    );
    assert!(lines[1].starts_with("tiny.pgm,uniform,30,"));
    assert!(lines[1].ends_with(",ok"));
    let table = fs::read_to_string(csv.with_extension("md")).unwrap();
    assert!(table.contains("| uniform | GGD |"));

    let out = ggd(&["bench", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--timing"]);
    assert!(out.status.success());
    let timed = fs::read_to_string(&csv).unwrap();
    let fields: Vec<&str> = timed.lines().nth(1).unwrap().split(',').collect();
    assert!(fields[10].parse::<u64>().is_ok());
}
