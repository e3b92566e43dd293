use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn itm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itm")).args(args).output().expect("binary runs")
}

fn run(command: &str, cfg: &str, extra: &[&str]) -> (i32, Value, String) {
    let path = config(cfg);
    let mut args = vec![command, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = itm(&args);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = if stdout.is_empty() { Value::Null } else { serde_json::from_str(&stdout).expect("report is JSON") };
    (out.status.code().unwrap(), json, String::from_utf8(out.stderr).unwrap())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn attractor_of_half_collapse() {
    let (code, r, _) = run("attractor", "half-collapse.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["command"], "attractor");
    assert_eq!(r["result"]["stabilizedAt"], 1);
    assert_eq!(r["result"]["finiteType"], "yes");
    assert_eq!(r["result"]["attractor"]["arcs"], serde_json::json!([{ "start": "0", "length": "1/2" }]));
    assert_eq!(r["config"]["map"]["shifts"], serde_json::json!(["0", "1/2"]));
    assert_eq!(r["config"]["budgets"]["maxIter"], 4096);
}

#[test]
fn validate_reports_the_violating_index() {
    let (code, r, err) = run("validate", "unsorted-breakpoints.json", &[]);
    assert_eq!(code, 1);
    assert_eq!(r, Value::Null);
    assert!(err.contains("index 2"), "{err}");

    let (code, r, _) = run("validate", "half-collapse.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["valid"], true);
}

#[test]
fn malformed_configs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        r#"{"mapp": {}}"#,
        r#"{"map": {"breakpoints": ["0"], "shifts": [0.5]}}"#,
        r#"{"map": {"breakpoints": ["0", "1/2"], "shifts": ["0"]}}"#,
        "not json",
    ] {
        let path = write_config(dir.path(), body);
        let out = itm(&["attractor", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{body}");
    }
    let out = itm(&["attractor"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing field `map`"));
}

#[test]
fn approximate_golden_rotation_limits_to_lebesgue() {
    let (code, r, _) = run("approximate", "golden-rotation.json", &["--levels", "18"]);
    assert_eq!(code, 0);
    let res = &r["result"];
    let levels = res["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 18);
    assert_eq!(levels.last().unwrap()["denominator"], 6765);
    let leb = serde_json::json!({
        "density": [{ "arc": { "start": "0", "length": "1" }, "weight": "1" }],
        "atoms": [],
        "totalMass": "1"
    });
    assert!(levels.iter().all(|l| l["measure"] == leb));
    assert_eq!(res["convergence"]["cauchy"], true);
    assert_eq!(res["convergence"]["limitCandidate"], leb);
    assert_eq!(res["limitIsLebesgue"], true);
    assert_eq!(res["limit"]["failing"], serde_json::json!([]));
    assert_eq!(r["config"]["levels"], 18);
}

#[test]
fn declared_relations_hold_at_every_level() {
    let (code, r, _) = run("approximate", "declared-relation.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["relationsHoldAtEveryLevel"], true);
    assert_eq!(r["result"]["collisions"]["mR"], 1);
}

#[test]
fn budget_exhaustion_exits_2_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, err) = run("attractor", "two-piece-rational.json", &["--max-iter", "1"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(r["result"]["finiteType"], "no-within-budget");
    assert_eq!(r["status"]["exitCode"], 2);
    assert!(err.contains("itm-engine::attractor"), "{err}");

    let path = config("two-piece-rational.json");
    let out =
        itm(&["measure", "--config", path.to_str().unwrap(), "--max-iter", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("measure.json").exists());
}

#[test]
fn negative_control_fails_verification() {
    let (code, r, err) = run("verify-limit", "halving-with-jump.json", &[]);
    assert_eq!(code, 3);
    assert!(err.contains("verifyLimitMeasure"), "{err}");
    let report = &r["result"]["report"];
    assert_eq!(report["nullDiscontinuities"], false);
    assert!((report["residual"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    assert_eq!(r["result"]["massAtDiscontinuities"], "1");

    let (code, r, _) = run("empirical", "halving-with-jump.json", &["--out", "/dev/null/unused"]);
    assert_eq!(code, 1, "unwritable output directory is a config error");
    assert_eq!(r, Value::Null);
}

#[test]
fn empirical_rotation_is_equidistributed() {
    let (code, r, _) = run("empirical", "golden-convergent-orbit.json", &[]);
    assert_eq!(code, 0);
    let defects = r["result"]["defects"].as_array().unwrap();
    assert_eq!(defects.len(), 4);
    for d in defects {
        assert_eq!(d["defect"], d["expected"]);
    }
    let last = defects.last().unwrap()["cdfDistanceToReference"].as_str().unwrap();
    let (p, q) = last.split_once('/').unwrap();
    assert!(p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap() <= 1e-3);
    assert_eq!(r["result"]["empiricalMeasure"], Value::Null);
}

#[test]
fn conjugate_splits_pieces_at_carried_gaps() {
    let (code, r, _) = run("conjugate", "two-piece-rational.json", &[]);
    assert_eq!(code, 0);
    let iem = &r["result"]["iem"];
    assert_eq!(iem["breakpoints"], serde_json::json!(["0", "1/3", "2/3"]));
    assert_eq!(iem["shifts"], serde_json::json!(["0", "1/3", "2/3"]));
    assert_eq!(r["result"]["tau"], serde_json::json!(["0", "1/3", "1"]));

    let (code, r, _) = run("conjugate", "half-collapse.json", &[]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["iem"]["breakpoints"], serde_json::json!(["0"]));
    assert_eq!(r["result"]["iem"]["shifts"], serde_json::json!(["0"]));
}

#[test]
fn measure_residual_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let path = config("half-collapse.json");
    let out = itm(&["measure", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--plot"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&std::fs::read(dir.path().join("measure.json")).unwrap()).unwrap();
    assert_eq!(r["result"]["invarianceResidualExact"], "0");
    assert_eq!(r["result"]["nonAtomic"], true);
    assert_eq!(r["result"]["recurrence"]["fraction"], 1.0);
    let csv = std::fs::read_to_string(dir.path().join("measure-cdf.csv")).unwrap();
    assert!(csv.starts_with("x,F(x)\n"), "{csv}");
    assert!(csv.contains("1/2,1\n"), "{csv}");
    for svg in ["measure-density.svg", "measure-cdf.svg", "measure-attractor.svg"] {
        let text = std::fs::read_to_string(dir.path().join(svg)).unwrap();
        assert!(text.starts_with("<svg"), "{svg}");
    }
}

#[test]
fn plots_need_an_output_directory() {
    let path = config("half-collapse.json");
    let out = itm(&["attractor", "--config", path.to_str().unwrap(), "--plot"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn tables_use_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let path = config("halving-with-jump.json");
    assert_eq!(itm(&["empirical", "--config", path.to_str().unwrap(), "--out", d]).status.code(), Some(0));
    let freq = std::fs::read_to_string(dir.path().join("empirical-frequency.csv")).unwrap();
    assert!(freq.starts_with("m,eps,f\n"), "{freq}");
    let path = config("half-collapse.json");
    assert_eq!(itm(&["conjugate", "--config", path.to_str().unwrap(), "--out", d]).status.code(), Some(0));
    let h = std::fs::read_to_string(dir.path().join("conjugate-h.csv")).unwrap();
    assert!(h.starts_with("x,h(x)\n0,0\n"), "{h}");
    assert!(h.contains("\n1/4,1/2\n"), "{h}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for (command, cfg) in [
        ("measure", "two-piece-rational.json"),
        ("homtervals", "two-piece-rational.json"),
        ("relations", "half-collapse.json"),
        ("conjugate", "two-piece-rational.json"),
        ("empirical", "halving-with-jump.json"),
    ] {
        let path = config(cfg);
        let args = [command, "--config", path.to_str().unwrap(), "--seed", "7"];
        let a = itm(&args);
        let b = itm(&args);
        assert_eq!(a.status.code(), Some(0), "{command}");
        assert_eq!(a.stdout, b.stdout, "{command}");
    }
}

#[test]
fn tolerance_flag_accepts_fractions() {
    let (code, r, _) = run("validate", "half-collapse.json", &["--tol", "1/1000"]);
    assert_eq!(code, 0);
    assert_eq!(r["config"]["tol"], "1/1000");
    let path = config("half-collapse.json");
    let out = itm(&["validate", "--config", path.to_str().unwrap(), "--tol", "x/y"]);
    assert_ne!(out.status.code(), Some(0));
}
