//! End-to-end runs of the `bures-geo` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const RHO: &str = r#"{"n":2,"re":[[0.7,0],[0,0.3]],"im":[[0,0],[0,0]]}"#;
const SIGMA: &str = r#"{"n":2,"re":[[0.4,0],[0,0.6]],"im":[[0,0],[0,0]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bures-geo"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn fixture() -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let r = write(&dir, "rho.json", RHO);
    let s = write(&dir, "sigma.json", SIGMA);
    (dir, r, s)
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut c = bin();
    for a in args {
        c.arg(a);
    }
    c.output().unwrap()
}

fn ok_json(out: Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn matrix_re(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v["re"].clone()).unwrap()
}

fn max_diff(a: &[Vec<f64>], b: &[[f64; 2]; 2]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

fn stdout_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.starts_with(key)).unwrap();
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn fidelity_of_qubit_fixture() {
    let (dir, r, s) = fixture();
    let json = dir.path().join("f.json");
    let out = run(&[&"fidelity", &r, &s, &"--json", &json]);
    assert!(out.status.success());
    let f = stdout_value(&out, "fidelity");
    assert!((f - 0.908999).abs() < 1e-6, "{f}");
    let v = read_json(&json);
    assert_eq!(v["fidelity"].as_f64().unwrap(), f);
    assert!(json.with_extension("manifest.json").exists());
}

#[test]
fn fidelity_of_identical_states_is_one() {
    let (_dir, r, _s) = fixture();
    let out = run(&[&"fidelity", &r, &r]);
    assert!(out.status.success());
    assert!((stdout_value(&out, "fidelity") - 1.0).abs() < 1e-12);
    assert!(stdout_value(&out, "bures_angle").abs() < 1e-6);
}

#[test]
fn malformed_input_exits_with_code_2() {
    let (dir, r, _s) = fixture();
    let bad = write(&dir, "bad.json", "{\"n\": 2, \"re\": [[1");
    let out = run(&[&"fidelity", &r, &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let nonpsd = write(&dir, "neg.json", r#"{"n":2,"re":[[1.2,0],[0,-0.2]],"im":[[0,0],[0,0]]}"#);
    assert_eq!(run(&[&"fidelity", &r, &nonpsd]).status.code(), Some(2));
}

#[test]
fn enumeration_returns_all_sign_choices_by_length() {
    let (_dir, r, s) = fixture();
    let v = ok_json(run(&[&"geodesic", &r, &s, &"--enumerate"]));
    let specs = v.as_array().unwrap();
    assert_eq!(specs.len(), 4);
    let thetas: Vec<f64> = specs.iter().map(|g| g["spec"]["theta_V"].as_f64().unwrap()).collect();
    assert!(thetas.windows(2).all(|w| w[0] <= w[1]), "{thetas:?}");
    assert!(specs.iter().all(|g| g["samples"].as_array().unwrap().is_empty()));
    assert!(specs.iter().all(|g| g.get("intersections").is_none()));
}

#[test]
fn geodesic_samples_span_the_endpoints() {
    let (_dir, r, s) = fixture();
    let v = ok_json(run(&[&"geodesic", &r, &s, &"--signs", &"++", &"--samples", &"5"]));
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 5);
    let first = matrix_re(&samples[0]["state"]);
    let last = matrix_re(&samples[4]["state"]);
    assert!(max_diff(&first, &[[0.7, 0.0], [0.0, 0.3]]) < 1e-12);
    assert!(max_diff(&last, &[[0.4, 0.0], [0.0, 0.6]]) < 1e-12);
    assert_eq!(samples[4]["tau"].as_f64(), v["spec"]["theta_V"].as_f64());
}

#[test]
fn longer_geodesics_report_rank_deficient_intersections() {
    let (_dir, r, s) = fixture();
    let v = ok_json(run(&[&"geodesic", &r, &s, &"--signs", &"-+", &"--intersections"]));
    let hits = v["intersections"].as_array().unwrap();
    assert!(!hits.is_empty());
    for h in hits {
        assert_eq!(h["rank"].as_u64(), Some(1));
        assert_eq!(h["kernel_basis"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn evolve_hits_both_endpoints() {
    let (_dir, r, s) = fixture();
    let v = ok_json(run(&[&"evolve", &r, &s, &"--tau", &"0"]));
    assert!(max_diff(&matrix_re(&v["state"]), &[[0.7, 0.0], [0.0, 0.3]]) < 1e-12);
    let theta = v["theta"].as_f64().unwrap();
    let v = ok_json(run(&[&"evolve", &r, &s, &"--tau", &theta.to_string()]));
    assert!(max_diff(&matrix_re(&v["state"]), &[[0.4, 0.0], [0.0, 0.6]]) < 1e-12);
    assert!(v["max_route_deviation"].as_f64().unwrap() < 1e-8);
}

#[test]
fn circuit_round_trip_reaches_the_target() {
    let (dir, r, s) = fixture();
    let c = dir.path().join("circuit.json");
    let v = ok_json(run(&[&"evolve", &r, &s, &"--circuit", &c]));
    assert!(max_diff(&matrix_re(&v["state"]), &[[0.4, 0.0], [0.0, 0.6]]) < 1e-10);
    let circuit = read_json(&c);
    assert_eq!(circuit["qubits"].as_u64(), Some(2));
    let kinds: Vec<&str> = circuit["gates"].as_array().unwrap().iter().map(|g| g["kind"].as_str().unwrap()).collect();
    assert!(kinds.contains(&"ry") && kinds.contains(&"block"), "{kinds:?}");

    for variant in ["commuting", "entangling"] {
        let c = dir.path().join(format!("{variant}.json"));
        let out = run(&[&"evolve", &r, &"--circuit", &c, &"--variant", &variant, &"--alpha=-0.5477225575051661,0.8366600265340756"]);
        let v = ok_json(out);
        assert!(v["max_route_deviation"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn circuits_need_qubit_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let r = write(&dir, "r.json", r#"{"n":3,"re":[[0.5,0,0],[0,0.3,0],[0,0,0.2]],"im":[[0,0,0],[0,0,0],[0,0,0]]}"#);
    let s = write(&dir, "s.json", r#"{"n":3,"re":[[0.2,0,0],[0,0.3,0],[0,0,0.5]],"im":[[0,0,0],[0,0,0],[0,0,0]]}"#);
    let out = run(&[&"evolve", &r, &s, &"--circuit", &dir.path().join("c.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
    assert!(run(&[&"evolve", &r, &s, &"--tau", &"0.3"]).status.success());
}

fn metrology_config(dir: &TempDir) -> PathBuf {
    let text = format!(
        r#"{{"family": {{"kind": "geodesic", "rho": {RHO}, "sigma": {SIGMA}}},
            "x_true": 0.15321868671445474, "N_meas": 10000,
            "heisenberg": {{"rho": {RHO}, "probes": [1, 2, 3, 4], "gap": 1.0}}}}"#
    );
    write(dir, "config.json", &text)
}

#[test]
fn metrology_saturates_the_bound_and_scales_quadratically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = metrology_config(&dir);
    let out_dir = dir.path().join("out");
    let out = run(&[&"metrology", &cfg, &"--out", &out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let v = read_json(&out_dir.join("results.json"));
    let ratio = v["experiment"]["ratio"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&ratio), "ratio {ratio}");
    assert_eq!(v["experiment"]["x_est"].as_array().unwrap().len(), 200);

    let csv = std::fs::read_to_string(out_dir.join("heisenberg.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let n: f64 = cells[0].parse().unwrap();
        let q: f64 = cells[2].parse().unwrap();
        assert!((q - n * n).abs() < 1e-8, "{line}");
    }
    assert_eq!(csv.lines().count(), 1 + 4 * 4);

    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["seed"].as_u64(), Some(0));
    assert_eq!(manifest["command"], "metrology");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn metrology_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = metrology_config(&dir);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&[&"metrology", &cfg, &"--out", &a]).status.success());
    let status = bin()
        .env("BURES_GEO_THREADS", "1")
        .arg("metrology")
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    for f in ["results.json", "replicates.csv", "qfi.csv", "heisenberg.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn metrology_rejects_schema_violations() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(&dir, "typo.json", r#"{"x_ture": 0.1}"#);
    assert_eq!(run(&[&"metrology", &typo, &"--out", &dir.path().join("o")]).status.code(), Some(2));
    let empty = write(&dir, "empty.json", "{}");
    assert_eq!(run(&[&"metrology", &empty, &"--out", &dir.path().join("o")]).status.code(), Some(2));
    let unitary = format!(
        r#"{{"family": {{"kind": "unitary", "rho": {RHO}, "generator": {{"n":2,"re":[[0,1],[1,0]],"im":[[0,0],[0,0]]}}}},
            "povm": "optimal", "x_true": 0.2, "N_meas": 1000, "interval": [0, 1]}}"#
    );
    let p = write(&dir, "unitary.json", &unitary);
    assert_eq!(run(&[&"metrology", &p, &"--out", &dir.path().join("o")]).status.code(), Some(2));
}

#[test]
fn selfcheck_single_criterion() {
    let out = run(&[&"selfcheck", &"--criterion", &"1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS [1]"));
    assert_eq!(run(&[&"selfcheck", &"--criterion", &"99"]).status.code(), Some(2));
}
