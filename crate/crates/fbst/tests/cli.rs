//! End-to-end tests of the command-line interface: output shape, exit
//! codes, determinism, and atomic file output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fbst")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fbst-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_spec(dir: &PathBuf, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

const BETA_SPEC: &str = r#"{
    "model": {
        "family": "beta_bernoulli",
        "prior": {"a": 1.0, "b": 1.0},
        "data": {"successes": 3, "trials": 4}
    },
    "hypothesis": {"type": "point", "value": [0.5]},
    "sampling": {"n": 50000, "seed": 11, "method": "direct"}
}"#;

fn result_sha(stdout: &[u8]) -> String {
    let v: serde_json::Value = serde_json::from_slice(stdout).expect("valid JSON report");
    v["meta"]["result_sha256"].as_str().expect("sha present").to_string()
}

#[test]
fn test_subcommand_reports_and_is_deterministic() {
    let dir = tmp_dir("test");
    let spec = write_spec(&dir, "beta.json", BETA_SPEC);
    let a = run(&["test", "--spec", spec.to_str().unwrap()]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!((v["result"]["ev"].as_f64().unwrap() - 0.2423).abs() < 0.02);
    assert_eq!(v["result"]["decision"], "Neutral");
    let b = run(&["test", "--spec", spec.to_str().unwrap()]);
    assert_eq!(result_sha(&a.stdout), result_sha(&b.stdout));
}

#[test]
fn seed_flag_overrides_spec() {
    let dir = tmp_dir("seed");
    let spec = write_spec(&dir, "beta.json", BETA_SPEC);
    let out = run(&["test", "--spec", spec.to_str().unwrap(), "--seed", "99"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["seed"].as_u64(), Some(99));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tmp_dir("out");
    let spec = write_spec(&dir, "beta.json", BETA_SPEC);
    let out_path = dir.join("report.json");
    let out = run(&[
        "test",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let file = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(file, String::from_utf8(out.stdout).unwrap());
    // no temp file left behind
    assert!(!dir.join("report.tmp").exists());
}

#[test]
fn csv_format_flattens_the_result() {
    let dir = tmp_dir("csv");
    let spec = write_spec(&dir, "beta.json", BETA_SPEC);
    let out = run(&["test", "--spec", spec.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("field,value\n"));
    assert!(text.lines().any(|l| l.starts_with("ev,")));
}

#[test]
fn malformed_spec_exits_2_without_output() {
    let dir = tmp_dir("bad");
    let spec = write_spec(&dir, "bad.json", r#"{"what": true}"#);
    let out = run(&["test", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty(), "no result may be printed on failure");
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["test", "--spec", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

const QUAD_SPEC: &str = r#"{
    "model": {
        "family": "beta_bernoulli",
        "prior": {"a": 1.0, "b": 1.0},
        "data": {"successes": 3, "trials": 4}
    },
    "hypothesis": {"type": "point", "value": [0.5]},
    "sampling": {"n": 50000, "seed": 11, "method": "quadrature"}
}"#;

#[test]
fn calibrate_shape_edge_and_determinism() {
    let dir = tmp_dir("cal");
    let spec = write_spec(&dir, "quad.json", QUAD_SPEC);
    let args = [
        "calibrate",
        "--spec",
        spec.to_str().unwrap(),
        "--grid",
        "50,200",
        "--theta0",
        "0.5",
        "--replicates",
        "200",
        "--format",
        "csv",
    ];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "n,c_n,replicates,seed");
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let c: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&c), "critical level {c}");
    }
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "identical seed must give identical CSV bytes");

    // alpha = 0 edge: the critical level is the maximum replicate ev_bar,
    // so it dominates the alpha = 0.05 level
    let mut zero_args = args.to_vec();
    zero_args.extend(["--alpha", "0.0"]);
    let z = run(&zero_args);
    assert!(z.status.success());
    let z_text = String::from_utf8(z.stdout).unwrap();
    let take = |t: &str| -> f64 { t.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap() };
    assert!(take(&z_text) >= take(&text));
}

#[test]
fn calibrate_infeasible_theta0_exits_2() {
    let dir = tmp_dir("calbad");
    let spec = write_spec(&dir, "quad.json", QUAD_SPEC);
    let out = run(&[
        "calibrate",
        "--spec",
        spec.to_str().unwrap(),
        "--grid",
        "50",
        "--theta0",
        "0.7",
        "--replicates",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn consistency_zero_replicates_exits_2() {
    let dir = tmp_dir("cons");
    let spec = write_spec(&dir, "quad.json", QUAD_SPEC);
    let out = run(&[
        "consistency",
        "--spec",
        spec.to_str().unwrap(),
        "--grid",
        "50",
        "--theta0",
        "0.5",
        "--replicates",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn invariance_subcommand_passes_and_rejects_inapplicable_maps() {
    let dir = tmp_dir("inv");
    let spec = write_spec(&dir, "quad.json", QUAD_SPEC);
    let ok = run(&[
        "invariance",
        "--spec",
        spec.to_str().unwrap(),
        "--map",
        "log_odds",
    ]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["pass"], true);

    let hwe = write_spec(
        &dir,
        "hwe.json",
        r#"{
        "model": {
            "family": "dirichlet_multinomial",
            "prior": {"alpha": [1.0, 1.0, 1.0]},
            "data": {"counts": [5, 2, 3]}
        },
        "hypothesis": {"type": "named", "name": "hardy_weinberg"},
        "sampling": {"n": 50000, "seed": 1, "method": "direct"}
    }"#,
    );
    let bad = run(&[
        "invariance",
        "--spec",
        hwe.to_str().unwrap(),
        "--map",
        "affine",
    ]);
    assert_eq!(bad.status.code(), Some(2), "affine is inapplicable on the simplex");
    assert!(bad.stdout.is_empty());
}

#[test]
fn qq_subcommand_prints_a_table() {
    let a = run(&["qq", "--t", "2", "--h", "0,1", "--c", "0.0,0.5,1.0"]);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "t,h,c,qq");
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().any(|r| r.starts_with("2,1,0.5,0.76")));
    let b = run(&["qq", "--t", "2", "--h", "0,1", "--c", "0.0,0.5,1.0"]);
    assert_eq!(a.stdout, b.stdout);

    let bad = run(&["qq", "--t", "2", "--h", "3", "--c", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn w_curve_csv_is_exported_when_requested() {
    let dir = tmp_dir("curve");
    let curve_path = dir.join("w.csv");
    let body = format!(
        r#"{{
        "model": {{
            "family": "beta_bernoulli",
            "prior": {{"a": 1.0, "b": 1.0}},
            "data": {{"successes": 3, "trials": 4}}
        }},
        "hypothesis": {{"type": "point", "value": [0.5]}},
        "sampling": {{"n": 20000, "seed": 2, "method": "direct"}},
        "output": {{"w_curve_csv": "{}"}}
    }}"#,
        curve_path.to_str().unwrap()
    );
    let spec = write_spec(&dir, "curve.json", &body);
    let out = run(&["test", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&curve_path).unwrap();
    assert!(csv.starts_with("v,w\n"));
    assert_eq!(csv.lines().count(), 513);
    // W values are nondecreasing in v along the curve
    let ws: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(ws.windows(2).all(|w| w[1] >= w[0]));
}
