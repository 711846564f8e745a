use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kernelforge::pnm::{save_pgm, Depth};
use kernelforge::Image;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernelforge"))
        .args(args)
        .env_remove("KERNELFORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn coeff(v: &serde_json::Value, i: usize, j: usize) -> f64 {
    v["coeffs"][i][j].as_str().unwrap().parse().unwrap()
}

#[test]
fn design_k22_matches_known_minimum() {
    let k = json(&["design", "--r", "2", "--p", "2"]);
    assert_eq!(k["r"], "2");
    assert_eq!(k["p"], 2);
    // c0_1 is the middle root of 784x³ + 4002x² + 6384x + 2611
    let c01 = coeff(&k, 0, 0);
    assert!((c01 + 0.621913).abs() < 5e-7, "{c01}");
    assert!((coeff(&k, 0, 1) + 1.0 + c01).abs() < 1e-12);
}

#[test]
fn design_report_lists_one_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let kernel = dir.path().join("k.json");
    let status = run(&[
        "design",
        "--r",
        "5/2",
        "--p",
        "3",
        "--output",
        kernel.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["kernel"], "K_(5/2,3)");
    let points = r["search"]["points"].as_array().unwrap();
    assert_eq!(points.iter().filter(|p| p["hessian_pd"] == true).count(), 1);
    assert!(r["minimum"]["residual"].as_f64().unwrap() < 1e-10);
    assert!(kernel.exists());
}

#[test]
fn unique_kernel_needs_no_search() {
    let k = json(&["design", "--r", "2", "--p", "3", "--smooth"]);
    assert_eq!(k["coeffs"][0], serde_json::json!(["0", "-5/2", "3/2"]));
}

#[test]
fn eval_exact_and_numeric_paths() {
    let keys = json(&["eval", "--kernel", "keys"]);
    assert_eq!(keys["exact"], true);
    assert_eq!(keys["theta"], "1/2");
    assert!((keys["value"].as_f64().unwrap() - 0.339).abs() < 5e-4);
    let ls = json(&["eval", "--kernel", "lanczos:3"]);
    assert_eq!(ls["exact"], false);
    assert!((ls["value"].as_f64().unwrap() - 0.255).abs() < 1e-3);
}

#[test]
fn eval_kernel_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("keys.json");
    fs::write(&path, r#"{"r":"2","p":3,"smooth":true,"coeffs":[["0","-5/2","3/2"],["-1/2","1","-1/2"]]}"#).unwrap();
    let from_file = json(&["eval", "--kernel-file", path.to_str().unwrap()]);
    let named = json(&["eval", "--kernel", "keys"]);
    assert_eq!(from_file["value"], named["value"]);
    assert_eq!(from_file["exact"], true);
}

#[test]
fn edge_field_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let edge = dir.path().join("edge");
    stdout(&["eval", "--kernel", "linear", "--edge-field", edge.to_str().unwrap(), "--field-upscale", "4"]);
    let csv = fs::read_to_string(edge.join("isolines.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "level,x0,y0,x1,y1"));
    assert!(csv.lines().filter(|l| l.starts_with("0.5,")).count() > 10);
    let img = kernelforge::pnm::load_pgm(&edge.join("edge.pgm")).unwrap();
    assert_eq!(img.width(), 7 * 4 + 1);
}

#[test]
fn free_variable_table() {
    let t = stdout(&["tables", "--which", "free-vars"]);
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(
        &lines[1..],
        &[
            "r,p2,p3,p4,p2_S,p3_S,p4_S",
            "1,0,0,0,-,-,-",
            "3/2,0,0,1,-,-,0",
            "2,1,2,3,-,0,1",
            "5/2,1,2,4,-,0,2",
            "3,2,4,6,-,1,3",
        ]
    );
}

#[test]
fn zoneplate_linear_rmse() {
    let csv = stdout(&["zoneplate", "--kernel", "linear"]);
    let row = csv.lines().last().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "linear");
    let rmse: f64 = fields[1].parse().unwrap();
    assert!((rmse / 1.26e-1 - 1.0).abs() < 0.03, "{rmse}");
    assert!(csv.starts_with("# search="));
}

#[test]
fn compare_scores_span_zero_to_hundred() {
    let csv = stdout(&["compare", "--kernels", "linear,keys"]);
    let rows: Vec<Vec<&str>> =
        csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][7], "0.00");
    let keys_score: f64 = rows[1][7].parse().unwrap();
    assert!(keys_score > 0.0 && keys_score < 100.0);
}

#[test]
fn reruns_are_byte_identical() {
    let a = run(&["--threads", "1", "compare", "--kernels", "linear,keys,k_2_2"]);
    let b = run(&["--threads", "3", "compare", "--kernels", "linear,keys,k_2_2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run(&["design", "--r", "3", "--p", "3"]).stdout, run(&["design", "--r", "3", "--p", "3"]).stdout);
}

fn write_ramp(path: &Path) -> Image {
    let img = Image::from_fn(12, 9, |x, y| (x * 20 + y * 4) as f64 / 255.0);
    save_pgm(path, &img, Depth::Eight).unwrap();
    img
}

#[test]
fn resample_identity_and_upscale() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let img = write_ramp(&input);
    let same = dir.path().join("same.pgm");
    let up = dir.path().join("up.pgm");
    for (out, scale) in [(&same, "1"), (&up, "2")] {
        let o = run(&[
            "resample",
            "--input",
            input.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--kernel",
            "keys",
            "--scale",
            scale,
            "--grid",
            "endpoints",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(kernelforge::pnm::load_pgm(&same).unwrap(), img);
    let big = kernelforge::pnm::load_pgm(&up).unwrap();
    assert_eq!((big.width(), big.height()), (23, 17));
    // a linear ramp is reproduced between interior samples
    assert!((big.get(9, 8) - 106.0 / 255.0).abs() < 0.5 / 255.0 + 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["eval", "--kernel", "nosuch"]).status.code(), Some(1));
    assert_eq!(run(&["eval"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["design", "--r", "1", "--p", "4", "--smooth"]).status.code(), Some(2));
    let o =
        run(&["resample", "--input", "/nonexistent.pgm", "--output", "/tmp/x.pgm", "--kernel", "keys", "--scale", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_kernelforge"))
        .args(["tables", "--which", "free-vars"])
        .env("KERNELFORGE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
