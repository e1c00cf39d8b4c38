use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::io::Write;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasespace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn without_timestamp(text: &[u8]) -> String {
    let mut v: Value = serde_json::from_slice(text).unwrap();
    v["metadata"].as_object_mut().unwrap().remove("timestamp");
    v.to_string()
}

#[test]
fn decompose_identity_and_j() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.txt", "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
    let v = json(&run(&["decompose", s(&id)]));
    assert_eq!(f(&v["P"][0][0]), 0.0);
    assert_eq!(f(&v["L"][1][1]), 1.0);
    assert_eq!(f(&v["R"][0][0]), 1.0);
    assert!(v["metadata"]["tool_version"].is_string());
    assert!(v["metadata"]["timestamp"].is_string());
    assert_eq!(f(&v["metadata"]["config"]["hbar"]), 1.0);

    let j = write(&dir, "j.json", "[[0, 1], [-1, 0]]");
    let v = json(&run(&["decompose", s(&j)]));
    assert_eq!(f(&v["R"][0][1]), 1.0);
    assert_eq!(f(&v["R"][1][0]), -1.0);
    assert!(f(&v["reconstruction_error"]) < 1e-15);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "[[1, 0.1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]");
    let out = run(&["decompose", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not symplectic"));

    let junk = write(&dir, "junk.json", "{ not json");
    assert_eq!(run(&["quantum-check", s(&junk)]).status.code(), Some(1));
    assert_eq!(run(&["decompose", s(&dir.path().join("missing"))]).status.code(), Some(1));

    let h4 = write(
        &dir,
        "h4.json",
        r#"{"variant":"polytope_h","dim":4,"params":{"normals":[[1,0,0,0],[-1,0,0,0],[0,1,0,0],[0,-1,0,0],[0,0,1,0],[0,0,-1,0],[0,0,0,1],[0,0,0,-1]]}}"#,
    );
    assert_eq!(run(&["mahler", s(&h4)]).status.code(), Some(3));

    let g = write(&dir, "g.json", r#"{"X":[[1.0]],"Y":[[0.0]],"z0":[0,0]}"#);
    assert_eq!(run(&["wigner-grid", s(&g), "--points", "16"]).status.code(), Some(4));

    // P = X^hbar / 2 does not contain X^hbar
    let pair = write(
        &dir,
        "pair.json",
        r#"{"X":{"variant":"ball","dim":2,"params":{"radius":1.0}},"P":{"variant":"ball","dim":2,"params":{"radius":0.5}}}"#,
    );
    assert_eq!(run(&["capacity", s(&pair)]).status.code(), Some(5));
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(1));
}

#[test]
fn mahler_reports() {
    let dir = TempDir::new().unwrap();
    let ball = write(&dir, "ball.json", r#"{"variant":"ball","dim":2,"params":{"radius":1.0}}"#);
    let v = json(&run(&["mahler", s(&ball)]));
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((f(&v["mahler"]) - pi2).abs() < 1e-12);
    assert_eq!(f(&v["mahler"]), f(&v["santalo_bound"]));

    let cube = write(&dir, "box.json", r#"{"variant":"box","dim":2,"params":{"half_widths":[1,1]}}"#);
    let v = json(&run(&["mahler", s(&cube), "--hbar", "0.5"]));
    assert!((f(&v["mahler"]) - 2.0).abs() < 1e-12);
    assert_eq!(f(&v["mahler"]), f(&v["conjecture_bound"]));

    let poly = write(
        &dir,
        "poly.json",
        r#"{"variant":"polytope_v","dim":2,"params":{"vertices":[[1,0.2],[0.3,1],[-0.8,0.6],[-1,-0.2],[-0.3,-1],[0.8,-0.6]]}}"#,
    );
    let v = json(&run(&["mahler", s(&poly), "--samples", "200000"]));
    let sigma3 = 3.0 * f(&v["std_error"]);
    assert!(f(&v["kuper_bound"]) <= f(&v["mahler"]) + sigma3);
    assert!(f(&v["mahler"]) <= f(&v["santalo_bound"]) + sigma3);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn determinism_under_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let poly = write(
        &dir,
        "poly.json",
        r#"{"variant":"polytope_v","dim":3,"params":{"vertices":[[1,0.2,0.1],[0.3,1,-0.2],[-0.1,0.3,1],[-1,-0.2,-0.1],[-0.3,-1,0.2],[0.1,-0.3,-1]]}}"#,
    );
    let a = run(&["mahler", s(&poly), "--samples", "100000", "--seed", "7"]);
    let b = run(&["mahler", s(&poly), "--samples", "100000", "--seed", "7"]);
    let c = run(&["mahler", s(&poly), "--samples", "100000", "--seed", "8"]);
    assert!(a.status.success());
    assert_eq!(without_timestamp(&a.stdout), without_timestamp(&b.stdout));
    assert_ne!(without_timestamp(&a.stdout), without_timestamp(&c.stdout));

    let fermi = write(&dir, "f.json", r#"{"X":[[1.5, 0.2],[0.2, 0.8]],"Y":[[0.1, 0],[0, -0.3]]}"#);
    let strip = |o: &Output| {
        String::from_utf8(o.stdout.clone())
            .unwrap()
            .lines()
            .skip(1)
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = run(&["flow", s(&fermi), "--steps", "10"]);
    let b = run(&["flow", s(&fermi), "--steps", "10"]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn quantum_check_and_capacity() {
    let dir = TempDir::new().unwrap();
    let cov = write(&dir, "cov.json", r#"{"Sigma":[[0.5,0],[0,0.5]]}"#);
    let v = json(&run(&["quantum-check", s(&cov)]));
    assert_eq!(v["quantum"], Value::Bool(true));
    assert!((f(&v["purity"]) - 1.0).abs() < 1e-12);
    assert_eq!(v["rs_margins"].as_array().unwrap().len(), 1);
    assert!(f(&v["rs_margins"][0]).abs() < 1e-15);

    let orbit = dir.path().join("orbit.csv");
    let v = json(&run(&["capacity", s(&cov), "--orbit-csv", s(&orbit)]));
    let pi = std::f64::consts::PI;
    assert!((f(&v["c_ellipsoid"]) - pi).abs() < 1e-12);
    assert!((f(&v["orbit_action"]) - pi).abs() < 1e-12);
    assert_eq!(v["quantum_floor_satisfied"], Value::Bool(true));
    let text = std::fs::read_to_string(&orbit).unwrap();
    assert!(text.starts_with("# metadata"));
    assert_eq!(text.lines().nth(1), Some("x0,p0"));

    let thin = write(&dir, "thin.json", r#"{"Sigma":[[0.3,0],[0,0.5]]}"#);
    let v = json(&run(&["capacity", s(&thin)]));
    assert_eq!(v["quantum_floor_satisfied"], Value::Bool(false));

    let qs = write(
        &dir,
        "qs.json",
        r#"{"S":[[1,0],[0.5,1]],"body":{"variant":"box","dim":1,"params":{"half_widths":[2]}},"hbar":0.5}"#,
    );
    let v = json(&run(&["capacity", s(&qs)]));
    assert!((f(&v["c_max_quasi"]) - 2.0).abs() < 1e-15);
}

#[test]
fn blob_round_trip_is_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", r#"{"X":[[2.0,0.3],[0.3,1.0]],"Y":[[0.5,-0.1],[-0.1,0.2]],"z0":[0.1,0.2,-0.3,0.4],"hbar":0.7}"#);
    let b1 = dir.path().join("b1.json");
    let g1 = dir.path().join("g1.json");
    let b2 = dir.path().join("b2.json");
    for (i, o) in [(&g, &b1), (&b1, &g1), (&g1, &b2)] {
        assert!(run(&["blob", s(i), "--output", s(o)]).status.success());
    }
    let read = |p: &Path| -> Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
    let (v1, v2) = (read(&b1), read(&b2));
    let flat = |v: &Value| -> Vec<f64> {
        v["S"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap().iter().map(f)).collect()
    };
    for (a, b) in flat(&v1).iter().zip(flat(&v2)) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(v1["z0"], v2["z0"]);
    let g1 = read(&g1);
    assert!((f(&g1["X"][0][1]) - 0.3).abs() < 1e-12);
    assert!((f(&g1["Y"][1][1]) - 0.2).abs() < 1e-12);
    assert_eq!(f(&g1["hbar"]), 0.7);
}

#[test]
fn stdin_input() {
    let mut child = bin()
        .args(["quantum-check", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(br#"{"Sigma":[[1,0],[0,1]],"hbar":2.0}"#).unwrap();
    let out = child.wait_with_output().unwrap();
    let v = json(&out);
    assert_eq!(v["quantum"], Value::Bool(true));
}

#[test]
fn flow_csv_and_paper_time_scale() {
    let dir = TempDir::new().unwrap();
    let fermi = write(&dir, "f.json", r#"{"X":[[1.0]],"Y":[[0.0]]}"#);
    let out = run(&["flow", s(&fermi), "--steps", "4", "--t-end", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# metadata {"));
    assert_eq!(lines.next(), Some("t,defect,energy_drift,phase_error"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[1] <= 1e-8 && r[2] <= 1e-9 && r[3] <= 1e-8, "{r:?}");
    }
    let out = run(&["flow", s(&fermi), "--steps", "1", "--t-end", "1", "--paper-time-scale", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["metadata"]["config"]["paper_time_scale"], Value::Bool(true));
    assert_eq!(f(&v["rows"][1]["t"]), 1.0);
}

#[test]
fn wigner_dumps() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", r#"{"X":[[1.3]],"Y":[[0.4]],"z0":[0.2,-0.1]}"#);
    let bin_path = dir.path().join("w.bin");
    assert!(run(&["wigner-grid", s(&g), "--points", "128", "--binary", "--output", s(&bin_path)])
        .status
        .success());
    let bytes = std::fs::read(&bin_path).unwrap();
    assert_eq!(&bytes[..8], b"WIGGRID1");
    let nx = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let np = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    assert_eq!(nx, 128);
    assert_eq!(bytes.len(), 56 + 8 * nx * np);
    let dx = f64::from_le_bytes(bytes[32..40].try_into().unwrap());
    let dp = f64::from_le_bytes(bytes[48..56].try_into().unwrap());
    let integral: f64 = bytes[56..]
        .chunks(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .sum::<f64>()
        * dx
        * dp;
    assert!((integral - 1.0).abs() < 1e-6);

    let out = run(&["wigner-grid", s(&g), "--points", "64", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# metadata {"));
    assert_eq!(text.lines().nth(1), Some("x,p,W"));
}

#[test]
fn csv_reports() {
    let dir = TempDir::new().unwrap();
    let cov = write(&dir, "cov.json", r#"{"Sigma":[[0.5,0],[0,0.5]]}"#);
    let out = run(&["quantum-check", s(&cov), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "quantum,true"));
    assert!(text.lines().any(|l| l.starts_with("rs_margins[0],")));
}

#[test]
fn verify_all_passes() {
    let out = run(&["verify", "all"]);
    let v = json(&out);
    assert_eq!(v["all_passed"], Value::Bool(true));
    assert_eq!(v["suites"].as_array().unwrap().len(), 6);
    let names: Vec<&str> = v["suites"].as_array().unwrap().iter().map(|s| s["suite"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}
