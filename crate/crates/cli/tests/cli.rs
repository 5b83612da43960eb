// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gibbs-thermo"));
    c.env_remove("GIBBS_THERMO_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

fn write_diag(dir: &Path, name: &str, diag: &[f64]) -> PathBuf {
    let d = diag.len();
    let entries: Vec<String> = (0..d * d)
        .map(|k| {
            let v = if k / d == k % d { diag[k / d] } else { 0.0 };
            format!("[{v}, 0.0]")
        })
        .collect();
    let path = dir.join(name);
    fs::write(&path, format!("{{\"dim\": {d}, \"entries\": [{}]}}", entries.join(", "))).unwrap();
    path
}

#[test]
fn solve_mixed_state_is_zero() {
    let dir = TempDir::new().unwrap();
    let m = write_diag(dir.path(), "m.json", &[0.0, 1.0]);
    let rho = write_diag(dir.path(), "rho.json", &[0.5, 0.5]);
    let o = run(&["solve", "--observable", m.to_str().unwrap(), "--state", rho.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "beta"), 0.0);
}

#[test]
fn solve_target_round_trip() {
    let o = run(&["solve", "--spectrum", "0,1", "--target", "0.4180233"]);
    assert!(o.status.success());
    assert!((field(&stdout(&o), "beta") - 1.0).abs() < 1e-6);
}

#[test]
fn solve_exit_codes() {
    assert_eq!(run(&["solve", "--spectrum", "0,1", "--target", "1.5"]).status.code(), Some(3));
    let o = run(&["solve", "--spectrum", "0,1", "--target", "-0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside"));

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"dim\": 2, \"entries\": [[1, 0]]}").unwrap();
    assert_eq!(
        run(&["solve", "--observable", bad.to_str().unwrap(), "--target", "0.5"]).status.code(),
        Some(2)
    );
    let m = write_diag(dir.path(), "m.json", &[0.0, 1.0]);
    let rho3 = write_diag(dir.path(), "rho3.json", &[0.2, 0.3, 0.5]);
    assert_eq!(
        run(&["solve", "--observable", m.to_str().unwrap(), "--state", rho3.to_str().unwrap()]).status.code(),
        Some(4)
    );
    let pure = write_diag(dir.path(), "pure.json", &[1.0, 0.0]);
    let o = run(&["solve", "--observable", m.to_str().unwrap(), "--state", pure.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("+inf"));
}

#[test]
fn partition_curve_rows() {
    let o = run(&["partition-curve", "--spectrum", "0,1", "--beta-min", "-2", "--beta-max", "2", "--grid", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2], vec![0.0, 0.0, 0.5, 1.0 / 12.0, 0.0]);
    assert!((rows[3][1] - (-0.4586751)).abs() < 1e-7);
    assert!((rows[3][2] - 0.4180233).abs() < 1e-7);
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]));
    assert!(rows.iter().all(|r| r[4] >= 0.0));
    assert_eq!(run(&["partition-curve", "--spectrum", "0,x", "--beta-min", "0", "--beta-max", "1", "--grid", "2"]).status.code(), Some(2));
}

#[test]
fn sample_is_deterministic_across_threads() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (threads, name) in [("1", "a.csv"), ("4", "b.csv"), ("4", "c.csv")] {
        let out = dir.path().join(name);
        let o = bin()
            .env("GIBBS_THERMO_THREADS", threads)
            .args(["sample", "--spectrum", "0,0.5,2", "--beta", "1.5", "--count", "10000", "--seed", "9"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("# seed=9\n"));
    assert!(text.contains("# method=rejection"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10_001);
}

#[test]
fn sample_json_matches_csv_data() {
    let o = run(&["sample", "--spectrum", "0,1", "--beta", "0", "--count", "5", "--seed", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 5);
    assert_eq!(v["dim"], 2);
    assert_eq!(v["ess"].as_f64(), Some(5.0));
    let csv = stdout(&run(&["sample", "--spectrum", "0,1", "--beta", "0", "--count", "5", "--seed", "2"]));
    let first: Vec<f64> = csv.lines().nth(6).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let json_first: Vec<f64> = v["states"][0].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(&first[..4], &json_first[..]);
}

#[test]
fn sample_cold_falls_back() {
    let o = run(&["sample", "--spectrum", "0,1", "--beta", "100", "--count", "100", "--seed", "1"]);
    assert!(stdout(&o).contains("# method=importance"));
}

#[test]
fn sample_boundary_state() {
    let dir = TempDir::new().unwrap();
    let pure = write_diag(dir.path(), "pure.json", &[0.0, 1.0]);
    let o = run(&["sample", "--spectrum", "0,1", "--state", pure.to_str().unwrap(), "--count", "10"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_pass_and_negative_control() {
    let o = run(&["verify", "--spectrum", "0,1", "--beta", "1", "--samples", "1000000", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = run(&["verify", "--spectrum", "0,1", "--beta", "1", "--samples", "100000", "--corrupt-log-z", "0.05"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("status FAIL"));
}

#[test]
fn verify_beta_zero_partition_is_exact() {
    let o = run(&["verify", "--spectrum", "-1,0.3,2", "--beta", "0", "--samples", "20000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("partition ")).unwrap();
    let z: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert_eq!(z, 0.0);
    assert!(text.lines().skip(1).all(|l| !l.contains("NaN") && !l.contains("inf")));
}

#[test]
fn couple_examples() {
    let dir = TempDir::new().unwrap();
    let m = write_diag(dir.path(), "m.json", &[0.0, 1.0]);
    let hot = write_diag(dir.path(), "hot.json", &[0.9, 0.1]);
    let mixed = write_diag(dir.path(), "mixed.json", &[0.5, 0.5]);
    let (m, hot, mixed) = (m.to_str().unwrap(), hot.to_str().unwrap(), mixed.to_str().unwrap());

    let o = run(&["couple", "--observable-a", m, "--state-a", hot, "--observable-b", m, "--state-b", hot]);
    assert!(o.status.success());
    let t = stdout(&o);
    let (a, b, j) = (field(&t, "beta_a"), field(&t, "beta_b"), field(&t, "beta_joint"));
    assert!((a - b).abs() < 1e-12 && (j - a).abs() < 1e-8);

    let o = run(&["couple", "--observable-a", m, "--state-a", hot, "--spectrum-b", "0,1", "--state-b", mixed]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(0.0 < field(&t, "beta_joint") && field(&t, "beta_joint") < field(&t, "beta_a"));
    assert!(t.contains("interleaved true"));

    let o = run(&["couple", "--random", "100", "--seed", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("interleaved 100/100"));
}

#[test]
fn manifest_and_replay() {
    let dir = TempDir::new().unwrap();
    let m = write_diag(dir.path(), "m.json", &[0.0, 1.0, 3.0]);
    let out = dir.path().join("s.csv");
    let o = run(&[
        "sample",
        "--observable",
        m.to_str().unwrap(),
        "--beta",
        "0.7",
        "--count",
        "500",
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let manifest_path = dir.path().join("s.csv.manifest.json");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sample");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["tool_version"].is_string());
    let first = fs::read(&out).unwrap();
    fs::remove_file(&out).unwrap();

    let o = run(&["replay", manifest_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&out).unwrap(), first);

    fs::write(&m, "{\"dim\": 1, \"entries\": [[0, 0]]}").unwrap();
    assert_eq!(run(&["replay", manifest_path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn explicit_manifest_for_stdout_runs() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("run.json");
    let o = run(&["solve", "--spectrum", "0,1", "--target", "0.3", "--manifest", path.to_str().unwrap()]);
    assert!(o.status.success());
    let o2 = run(&["replay", path.to_str().unwrap()]);
    assert!(o2.status.success());
    assert_eq!(o.stdout, o2.stdout);
}

#[test]
fn invalid_thread_env_is_rejected() {
    let o = bin()
        .env("GIBBS_THERMO_THREADS", "0")
        .args(["sample", "--spectrum", "0,1", "--beta", "1", "--count", "5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
