//! End-to-end checks of the command-line interface and its exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddctrl"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ddctrl-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

#[test]
fn synth_lqr_scalar_desk_exit_codes() {
    let dir = workdir("lqr");
    write(&dir.join("x.csv"), "1.0\n0.1\n");
    write(&dir.join("u.csv"), "-0.4\n");
    write(
        &dir.join("spec.json"),
        r#"{"Q": [[1.0]], "R": [[1.0]], "x0": [1.0], "gamma": 1.2}"#,
    );

    let out = bin()
        .args(["synth-lqr", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .arg("--spec")
        .arg(dir.join("spec.json"))
        .arg("-o")
        .arg(dir.join("result.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
    let k = result["K"][0][0].as_f64().unwrap();
    assert!((k + 0.4).abs() < 1e-6, "K = {k}");
    assert_eq!(result["status"], "feasible");
    assert!((result["gamma"].as_f64().unwrap() - 116.0 / 99.0).abs() < 1e-3);

    // below the achievable cost: infeasible, exit 1
    let tight = bin()
        .args(["synth-lqr", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .arg("--spec")
        .arg(dir.join("spec.json"))
        .args(["--gamma", "1.1"])
        .output()
        .unwrap();
    assert_eq!(tight.status.code(), Some(1));

    // usage error: unknown flag
    let usage = bin().args(["synth-lqr", "--bogus"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn check_reports_rank_deficiency() {
    let dir = workdir("check");
    // two states, a single sample: X- cannot have full row rank
    write(&dir.join("x.csv"), "1.0,0.2\n0.5,0.1\n");
    write(&dir.join("u.csv"), "1.0\n");
    let out = bin()
        .args(["check", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rank"), "stderr: {err}");
}

#[test]
fn simulate_check_synth_verify_pipeline() {
    let dir = workdir("pipe");
    write(
        &dir.join("sys.json"),
        r#"{"A": [[0.6, 0.2], [0.0, 0.5]], "B": [[1.0], [0.4]]}"#,
    );
    let status = bin()
        .args(["simulate", "--system"])
        .arg(dir.join("sys.json"))
        .args(["--x0", "0.4,0.7", "--steps", "6", "--seed", "3"])
        .arg("--out-x")
        .arg(dir.join("x.csv"))
        .arg("--out-u")
        .arg(dir.join("u.csv"))
        .status()
        .unwrap();
    assert!(status.success());

    let check = bin()
        .args(["check", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .output()
        .unwrap();
    assert_eq!(check.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(report["unique"], serde_json::json!(true));

    write(
        &dir.join("spec.json"),
        r#"{"Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0]], "x0": [1.0, 2.0]}"#,
    );
    let synth = bin()
        .args(["synth-lqr", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .arg("--spec")
        .arg(dir.join("spec.json"))
        .arg("--minimize")
        .arg("-o")
        .arg(dir.join("result.json"))
        .output()
        .unwrap();
    assert_eq!(synth.status.code(), Some(0), "{}", String::from_utf8_lossy(&synth.stderr));
    let result: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
    let gamma = result["gamma"].as_f64().unwrap();

    // verify the produced gain against the true system at a slightly
    // relaxed bound (pass), then at an unreachable one (fail)
    write(
        &dir.join("verify_ok.json"),
        &format!(
            r#"{{"Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0]], "x0": [1.0, 2.0], "gamma": {}}}"#,
            gamma * 1.001
        ),
    );
    let ok = bin()
        .args(["verify", "--system"])
        .arg(dir.join("sys.json"))
        .arg("--spec")
        .arg(dir.join("verify_ok.json"))
        .arg("--result")
        .arg(dir.join("result.json"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    write(
        &dir.join("verify_bad.json"),
        &format!(
            r#"{{"Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0]], "x0": [1.0, 2.0], "gamma": {}}}"#,
            gamma * 0.5
        ),
    );
    let bad = bin()
        .args(["verify", "--system"])
        .arg(dir.join("sys.json"))
        .arg("--spec")
        .arg(dir.join("verify_bad.json"))
        .arg("--result")
        .arg(dir.join("result.json"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn synth_h2_from_files() {
    let dir = workdir("h2");
    write(
        &dir.join("sys.json"),
        r#"{"A": [[0.5]], "B": [[1.0]], "E": [[1.0]]}"#,
    );
    let status = bin()
        .args(["simulate", "--system"])
        .arg(dir.join("sys.json"))
        .args(["--x0", "0.3", "--steps", "6", "--seed", "7"])
        .arg("--out-x")
        .arg(dir.join("x.csv"))
        .arg("--out-u")
        .arg(dir.join("u.csv"))
        .arg("--out-w")
        .arg(dir.join("w.csv"))
        .status()
        .unwrap();
    assert!(status.success());

    write(
        &dir.join("h2spec.json"),
        r#"{"C": [[1.0], [0.0]], "D": [[0.0], [1.0]], "gamma": 1.2}"#,
    );
    let out = bin()
        .args(["synth-h2", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .arg("--w")
        .arg(dir.join("w.csv"))
        .arg("--spec")
        .arg(dir.join("h2spec.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["condition"], "ii");
    let e = result["E_identified"][0][0].as_f64().unwrap();
    assert!((e - 1.0).abs() < 1e-8);

    // gamma below the minimum achievable cost: conclusive infeasible
    let tight = bin()
        .args(["synth-h2", "--x"])
        .arg(dir.join("x.csv"))
        .arg("--u")
        .arg(dir.join("u.csv"))
        .arg("--w")
        .arg(dir.join("w.csv"))
        .arg("--spec")
        .arg(dir.join("h2spec.json"))
        .args(["--gamma", "1.0"])
        .output()
        .unwrap();
    assert_eq!(tight.status.code(), Some(1));
}

#[test]
fn bench_consensus_deterministic_csv() {
    let dir = workdir("bench");
    write(
        &dir.join("bench.json"),
        r#"{"nodes": 5, "extra_edges": 3, "leader_count": 2, "t_min": 5, "t_max": 8, "trials": 3, "seed": 11}"#,
    );
    let run = |tag: &str| -> (Vec<u8>, Vec<u8>) {
        let trials = dir.join(format!("trials-{tag}.csv"));
        let agg = dir.join(format!("agg-{tag}.csv"));
        let out = bin()
            .args(["bench-consensus", "--config"])
            .arg(dir.join("bench.json"))
            .arg("--out-trials")
            .arg(&trials)
            .arg("--out-aggregate")
            .arg(&agg)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(&trials).unwrap(), std::fs::read(&agg).unwrap())
    };
    let (t1, a1) = run("one");
    let (t2, a2) = run("two");
    assert_eq!(t1, t2, "trial CSVs differ between reruns");
    assert_eq!(a1, a2, "aggregate CSVs differ between reruns");

    let header = String::from_utf8_lossy(&a1);
    assert!(header.starts_with(
        "T,trials,feasible,inconclusive,success_fraction,avg_min_gamma,optimal_gamma_reference"
    ));
}
