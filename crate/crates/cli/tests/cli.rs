use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_painleve-lax"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn gen_config(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("cfg{seed}.json"));
    let out = run(&[
        "gen-config",
        "--seed",
        &seed.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn verify(mode: &str, cfg: &Path, out: &Path, extra: &[&str]) -> (Option<i32>, Value) {
    let mut args = vec![
        mode,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = run(&args);
    (o.status.code(), report(out))
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_ms");
    v
}

fn assert_schema(v: &Value) {
    for key in ["version", "seed", "config", "checks", "pass", "wall_ms"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let checks = v["checks"].as_array().unwrap();
    let mut names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let all_pass = checks.iter().all(|c| c["pass"].as_bool().unwrap());
    assert_eq!(v["pass"].as_bool().unwrap(), all_pass);
    for c in checks {
        assert!(c["residual"].as_f64().unwrap().is_finite());
        assert!(c["threshold"].as_f64().unwrap() > 0.0);
    }
    let n = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), n, "duplicate check names");
}

#[test]
fn gen_config_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen_config(dir.path(), 11);
    let b = dir.path().join("again.json");
    run(&["gen-config", "--seed", "11", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    painleve_lax::config::Config::from_json(&text).unwrap();
    let stdout = run(&["gen-config", "--seed", "11"]).stdout;
    assert_eq!(stdout, std::fs::read(&a).unwrap());
}

#[test]
fn verify_compat_passes_on_a_generated_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 1);
    let (code, v) = verify(
        "verify-compat",
        &cfg,
        &dir.path().join("r.json"),
        &["--trials", "2"],
    );
    assert_eq!(code, Some(0), "{v}");
    assert_schema(&v);
    let dist = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "compatibility_distance")
        .unwrap();
    assert!(dist["residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn negative_control_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 2);
    let (code, v) = verify(
        "verify-compat",
        &cfg,
        &dir.path().join("r.json"),
        &["--negative-control"],
    );
    assert_eq!(code, Some(1));
    assert_schema(&v);
    assert!(!v["pass"].as_bool().unwrap());
}

#[test]
fn verify_lemmas_lists_every_identity_once() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 3);
    let (code, v) = verify(
        "verify-lemmas",
        &cfg,
        &dir.path().join("r.json"),
        &["--samples", "2"],
    );
    assert_eq!(code, Some(0), "{v}");
    assert_schema(&v);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    let expected: Vec<&str> = painleve_lax::identities::ALL
        .iter()
        .map(|(n, _)| *n)
        .collect();
    assert_eq!(names, expected);
}

#[test]
fn q_and_continuous_modes_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 4);
    for mode in ["qp6-verify", "p6-verify"] {
        let (code, v) = verify(
            mode,
            &cfg,
            &dir.path().join(format!("{mode}.json")),
            &["--trials", "3"],
        );
        assert_eq!(code, Some(0), "{mode}: {v}");
        assert_schema(&v);
    }
}

#[test]
fn reports_are_reproducible_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 5);
    let (_, a) = verify(
        "verify-compat",
        &cfg,
        &dir.path().join("a.json"),
        &["--seed", "9", "--trials", "2"],
    );
    let (_, b) = verify(
        "verify-compat",
        &cfg,
        &dir.path().join("b.json"),
        &["--seed", "9", "--trials", "2"],
    );
    assert_eq!(without_timing(a), without_timing(b));
}

#[test]
fn tolerance_override_can_fail_a_passing_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 6);
    let (code, v) = verify(
        "p6-verify",
        &cfg,
        &dir.path().join("r.json"),
        &["--tol", "1e-300"],
    );
    assert_eq!(code, Some(1));
    assert!(v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["threshold"].as_f64() == Some(1e-300)));
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        run(&["verify-compat", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-compat", "--config", "/definitely/missing.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-compat", "--trials", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify-compat", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-mode"]).status.code(), Some(2));
    // coincident base points violate the genericity margins
    let cfg = gen_config(dir.path(), 7);
    let mut v = report(&cfg);
    v["elliptic"]["u"][1] = v["elliptic"]["u"][0].clone();
    let degenerate = dir.path().join("degenerate.json");
    std::fs::write(&degenerate, v.to_string()).unwrap();
    let o = run(&["verify-compat", "--config", degenerate.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn flow_rows_start_from_the_configured_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 8);
    let v = report(&cfg);
    let out = dir.path().join("orbit.csv");
    let o = run(&[
        "flow",
        "--system",
        "qp6",
        "--steps",
        "5",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,u1_re,u1_im,u2_re,u2_im,f_re,f_im,g_re,g_im");
    assert_eq!(lines.len(), 7);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[5], v["qp6"]["f"][0].as_f64().unwrap());
    assert_eq!(first[6], v["qp6"]["f"][1].as_f64().unwrap());
    let o = run(&[
        "flow",
        "--steps",
        "2",
        "--on-curve",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(first[1], v["elliptic"]["u"][0][0].as_f64().unwrap());
}

#[test]
fn flow_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 9);
    for system in ["qp6", "elliptic"] {
        let args = [
            "flow",
            "--system",
            system,
            "--steps",
            "4",
            "--seed",
            "3",
            "--config",
            cfg.to_str().unwrap(),
        ];
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn flow_stops_at_a_pole_with_a_truncated_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gen_config(dir.path(), 10);
    let mut v = report(&cfg);
    // f = a3 puts the first update on a pole
    v["qp6"]["f"] = v["qp6"]["a"][2].clone();
    let path = dir.path().join("pole.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let out = dir.path().join("orbit.csv");
    let o = run(&[
        "flow",
        "--system",
        "qp6",
        "--steps",
        "3",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 1"));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);
}
