use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const FIG2: &str = r#"{"p": 2, "coefficients": [3, 2, 3, 5, 4, 1], "seed": 11}"#;

fn mop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mop")).args(args).env("MOP_THREADS", "1").output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn empty_degree_list_gives_header_only_zeros() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", FIG2);
    let out = tmp.path().join("out");
    let run = mop(&["figure", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read_to_string(out.join("zeros.csv")).unwrap(), "series,re,im\n");
    let gamma = fs::read_to_string(out.join("gamma.csv")).unwrap();
    assert!(gamma.lines().count() > 1);
}

#[test]
fn figure_lists_zeros_of_each_degree() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"p": 2, "coefficients": [3, 2, 3, 5, 4, 1], "n": [12]}"#);
    let out = tmp.path().join("out");
    assert!(mop(&["figure", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let zeros = fs::read_to_string(out.join("zeros.csv")).unwrap();
    assert_eq!(zeros.lines().filter(|l| l.starts_with("Q12,")).count(), 12);
    assert!(zeros.lines().any(|l| l.starts_with("P1_12,")));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", FIG2);
    let run = mop(&["verify", "--config", &cfg, "--suite", "bogus"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("bogus"));
}

#[test]
fn bad_configs_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for (name, text) in [
        ("neg.json", r#"{"p": 2, "coefficients": [1, -2]}"#),
        ("field.json", r#"{"p": 2, "coefficients": [1], "colour": "red"}"#),
        ("syntax.json", "{"),
    ] {
        let cfg = config(tmp.path(), name, text);
        let run = mop(&["gamma", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&run.stderr));
    }
    let missing = tmp.path().join("absent.json");
    assert_eq!(mop(&["gamma", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn widom_verification_passes() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"p": 2, "coefficients": [3, 2, 3, 5, 4, 1], "cases": 2}"#);
    let out = tmp.path().join("out");
    let run = mop(&["verify", "--config", &cfg, "--suite", "widom", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["suite"], "widom");
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);
    assert!(out.join("verify_widom.json").exists());
}

#[test]
fn same_seed_same_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"p": 2, "coefficients": [3, 2, 3, 5, 4, 1], "cases": 2, "n": [20]}"#);
    let mut runs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let run = Command::new(env!("CARGO_BIN_EXE_mop"))
            .args(["verify", "--config", &cfg, "--suite", "widom", "--seed", "5", "--out", out.to_str().unwrap()])
            .env("MOP_THREADS", threads)
            .output()
            .unwrap();
        assert!(run.status.success());
        let fig = mop(&["figure", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(fig.status.success());
        runs.push(["verify_widom.json", "zeros.csv", "gamma.csv"].map(|f| fs::read(out.join(f)).unwrap()));
    }
    assert!(runs[0] == runs[1]);
}

#[test]
fn thread_count_must_be_positive() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", FIG2);
    let run = Command::new(env!("CARGO_BIN_EXE_mop")).args(["gamma", "--config", &cfg]).env("MOP_THREADS", "0").output().unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn gamma_and_measure_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "c.json", r#"{"p": 2, "coefficients": [3, 1, 5, 2, 2, 9, 6, 1], "n": [40]}"#);
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    assert!(mop(&["gamma", "--config", &cfg, "--out", o]).status.success());
    let gamma = fs::read_to_string(out.join("gamma.csv")).unwrap();
    assert!(gamma.starts_with("k,interval,lo_t,hi_t,lo_x,hi_x,lo_residual,hi_residual\n"));
    assert_eq!(gamma.lines().count(), 1 + 3 + 2);
    let run = mop(&["measure", "--config", &cfg, "--out", o]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let masses: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("masses.json")).unwrap()).unwrap();
    for row in masses.as_array().unwrap() {
        let (got, want) = (row["mass"].as_f64().unwrap(), row["expected"].as_f64().unwrap());
        assert!((got - want).abs() < 1e-6, "{row}");
    }
    assert_eq!(fs::read_to_string(out.join("weak.csv")).unwrap().lines().count(), 1 + 2);
}
