use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gpa_core::order::epsilon_from_delta;
use gpa_core::{estimate_order, Image, SpatialKernel};
use serde_json::Value;
use tempfile::TempDir;

fn camera() -> Image {
    Image::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/camera_128.pgm"))
        .unwrap()
}

fn write(dir: &TempDir, name: &str, img: &Image) -> PathBuf {
    let p = dir.path().join(name);
    img.save(&p).unwrap();
    p
}

fn gpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpa")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = gpa(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn filter_with_delta_uses_estimated_order() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.pgm", &camera());
    let output = dir.path().join("out.pgm");
    let r = json(&[
        "filter", "--spatial", "gaussian", "--sigma-s", "5", "--sigma-r", "50", "--delta", "0.1",
        s(&input), s(&output),
    ]);
    let w0 = SpatialKernel::gaussian(5.0).unwrap().w0();
    let eps = epsilon_from_delta(0.1, w0, 128.0).unwrap();
    let n0 = estimate_order(50.0, eps, 128.0).unwrap().n0;
    assert_eq!(r["order"]["N0"], n0);
    assert_eq!(r["spatial_filterings"], n0 + 1);
    assert_eq!(r["params"]["delta"], 0.1);
    let out = Image::load(&output).unwrap();
    assert_eq!((out.width(), out.height()), (128, 128));
}

#[test]
fn filter_with_explicit_order() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.pgm", &camera());
    let output = dir.path().join("out.png");
    let r = json(&[
        "filter", "--spatial", "box", "--window", "10", "--sigma-r", "30", "--order", "40",
        s(&input), s(&output),
    ]);
    assert_eq!(r["order"]["N0"], 40);
    assert_eq!(r["order"]["method"], "explicit");
    assert_eq!(r["spatial_filterings"], 41);
    assert!(r["bounds"]["kernel_bound"].as_f64().unwrap() > 0.0);
    assert!(Image::load(&output).is_ok());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.pgm", &camera());
    let out = dir.path().join("out.pgm");
    let missing_sigma = gpa(&["filter", "--spatial", "gaussian", "--sigma-r", "30", "--order", "5", s(&input), s(&out)]);
    assert_eq!(missing_sigma.status.code(), Some(2));
    let both = gpa(&[
        "filter", "--sigma-s", "2", "--sigma-r", "30", "--order", "5", "--delta", "1", s(&input), s(&out),
    ]);
    assert_eq!(both.status.code(), Some(2));
    let small = gpa(&["filter", "--sigma-s", "2", "--sigma-r", "5", "--order", "5", s(&input), s(&out)]);
    assert_eq!(small.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn io_and_numeric_errors_have_their_own_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.pgm");
    let out = dir.path().join("out.pgm");
    let r = gpa(&["filter", "--sigma-s", "2", "--sigma-r", "30", "--order", "5", s(&missing), s(&out)]);
    assert_eq!(r.status.code(), Some(3));

    let img = Image::from_fn(32, 32, |x, _| if x < 16 { 108.0 } else { 148.0 });
    let input = write(&dir, "edge.pgm", &img);
    let r = gpa(&[
        "filter", "--sigma-s", "2", "--sigma-r", "1", "--order", "400", "--allow-small-sigma-r",
        s(&input), s(&out),
    ]);
    assert_eq!(r.status.code(), Some(4), "{}", String::from_utf8_lossy(&r.stderr));
}

fn method_order(r: &Value, method: &str) -> u64 {
    r["methods"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["method"] == method)
        .unwrap()["N0"]
        .as_u64()
        .unwrap()
}

#[test]
fn order_command() {
    let r = json(&["order", "--sigma-r", "30", "--epsilon", "1e-3"]);
    assert_eq!(r["order"]["N0"], 37);
    assert_eq!(method_order(&r, "chernoff_exhaustive"), 37);
    assert_eq!(method_order(&r, "chebyshev"), 154);
    assert_eq!(r["order"]["newton_trace"].as_array().unwrap().len(), 4);

    let r = json(&["order", "--sigma-r", "30", "--delta", "0.1", "--spatial", "gaussian", "--sigma-s", "5"]);
    assert_eq!(method_order(&r, "approx_formula"), 44);
    assert_eq!(method_order(&r, "yang_formula"), 401);

    let r = json(&["order", "--sigma-r", "80", "--epsilon", "1e-3"]);
    assert_eq!(r["order"]["N0"], 10);
    assert_eq!(r["order"]["method"], "fixed_large_sigma");

    assert_eq!(gpa(&["order", "--sigma-r", "30"]).status.code(), Some(2));
    assert_eq!(gpa(&["order", "--sigma-r", "30", "--epsilon", "2"]).status.code(), Some(2));
}

#[test]
fn compare_reports_errors_and_runtimes() {
    let dir = TempDir::new().unwrap();
    let crop = write(&dir, "crop.pgm", &camera().crop(32, 32, 64, 64).unwrap());
    let r = json(&[
        "compare", "--spatial", "gaussian", "--sigma-s", "5", "--sigma-r", "50", "--delta", "0.1", s(&crop),
    ]);
    assert!(r["errors"]["linf"].as_f64().unwrap() <= 0.1);
    assert!(r["runtime_ms"]["gpa"].is_number());
    assert!(r["runtime_ms"]["reference"].is_number());

    let flat = write(&dir, "flat.pgm", &Image::constant(32, 32, 77.0));
    let r = json(&["compare", "--sigma-s", "3", "--sigma-r", "30", "--order", "12", s(&flat)]);
    assert_eq!(r["errors"]["linf"], 0.0);
    assert_eq!(r["errors"]["mse_db"], "-inf");
    assert_eq!(r["errors"]["linf_db"], "-inf");

    let sweep = |n: &str| {
        json(&["compare", "--spatial", "box", "--window", "10", "--sigma-r", "30", "--order", n, s(&crop)])["errors"]
            ["linf"]
            .as_f64()
            .unwrap()
    };
    assert!(sweep("60") < sweep("10"));
}

#[test]
fn kernel_error_command() {
    let r = json(&["kernel-error", "--order", "40", "--sigma-r", "30"]);
    assert_eq!(r["bounds"]["sup_within_bound"], true);
    let r = json(&["kernel-error", "--order", "300", "--sigma-r", "30"]);
    assert!(r["bounds"]["kernel_sup"].as_f64().unwrap() <= 1e-12);
    let r = json(&["kernel-error", "--order", "1", "--sigma-r", "30"]);
    let want = 1.0 - (-(128.0f64 * 128.0) / 900.0).exp();
    assert!((r["bounds"]["kernel_sup"].as_f64().unwrap() - want).abs() < 1e-12);
}

#[test]
fn bench_report() {
    let r = json(&[
        "bench", "--spatial", "box", "--window", "2", "--size", "64", "--orders", "2,4", "--windows", "1,3",
        "--repeats", "3",
    ]);
    let rows = r["bench"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row["filterings"], row["N"].as_u64().unwrap() + 1);
        assert_eq!(row["samples_ms"].as_array().unwrap().len(), 3);
        assert!(row["median_ms"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(rows[2]["window"], 1);
    assert_eq!(rows[3]["N"], 2);
}

#[test]
fn reports_go_to_file_in_json_or_csv() {
    let dir = TempDir::new().unwrap();
    let jpath = dir.path().join("r.json");
    let cpath = dir.path().join("r.csv");
    let base = ["kernel-error", "--order", "20", "--sigma-r", "50"];
    let run = |extra: &[&str]| {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        let out = gpa(&args);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    };
    run(&["--report", s(&jpath)]);
    run(&["--report", s(&cpath), "--report-format", "csv"]);

    let text = std::fs::read_to_string(&jpath).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["params"]["order"], 20);
    assert_eq!(v["params"]["sigma_r"], 50.0);
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again["params"], v["params"]);

    let mut rdr = csv::Reader::from_path(&cpath).unwrap();
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |k: &str| row[header.iter().position(|h| h == k).unwrap()].to_string();
    assert_eq!(get("params.order"), "20");
    assert_eq!(get("bounds.sup_within_bound"), "true");
    assert_eq!(get("bounds.kernel_sup").parse::<f64>().unwrap(), v["bounds"]["kernel_sup"].as_f64().unwrap());
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "in.pgm", &camera());
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("ref{threads}.pgm"));
        let status = Command::new(env!("CARGO_BIN_EXE_gpa"))
            .env("GPA_THREADS", threads)
            .args(["reference", "--sigma-s", "2", "--sigma-r", "30", s(&input), s(&out)])
            .output()
            .unwrap();
        assert!(status.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = Command::new(env!("CARGO_BIN_EXE_gpa"))
        .env("GPA_THREADS", "zero")
        .args(["order", "--sigma-r", "30", "--epsilon", "0.01"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
