use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tissuebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tissuebench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = tissuebench(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    tissuebench(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn probe_writes_csv_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("soft.csv");
    let summary = ok_json(&["probe", "--tissue", "ecoflex10", "--out", s(&csv)]);
    let avg = summary["avg_contact_force"].as_f64().unwrap();
    assert!((avg - 2.26).abs() < 0.113, "{summary}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 8002);
    assert!(text.starts_with("time,commanded_pos,actual_pos,"));
}

#[test]
fn probe_accepts_a_contact_law_file() {
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("law.json");
    std::fs::write(&law, r#"{"contact_depth_mm": 12, "stiffness": 0.05, "damping": 0.01}"#).unwrap();
    let csv = dir.path().join("run.csv");
    let summary = ok_json(&["probe", "--tissue", s(&law), "--out", s(&csv), "--no-vision"]);
    assert!(summary["avg_contact_force"].as_f64().unwrap() > 0.5);

    std::fs::write(&law, r#"{"stiffness": "stiff"}"#).unwrap();
    assert_eq!(code(&["probe", "--tissue", s(&law), "--out", s(&csv)]), 1);
}

#[test]
fn compare_reports_the_delta_ratio() {
    let v = ok_json(&["compare", "--a", "ecoflex10", "--b", "ecoflex30", "--json", "--no-vision"]);
    let ratio = v["force_delta_ratio"].as_f64().unwrap();
    assert!((ratio - 1.39).abs() <= 0.05, "{v}");
    let table = tissuebench(&["compare", "--no-vision"]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("probe duration (s)"));
}

#[test]
fn dataset_regressor_and_vision_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = tissuebench(&["dataset", "build", "--n", "40", "--seed", "9", "--out", s(d)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("split 28/8/4"));
    }
    for f in ["manifest.csv", "split_train.csv", "split_val.csv", "split_test.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }

    let model = dir.path().join("model.json");
    let meta = ok_json(&["regressor", "train", "--dataset", s(&a), "--out", s(&model)]);
    assert!(meta["test_rmse"].as_f64().unwrap() < 4.23, "{meta}");
    let score = ok_json(&["regressor", "eval", "--dataset", s(&a), "--model", s(&model)]);
    assert_eq!(score["test_n"], 4);
    assert_eq!(score["test_rmse"], meta["test_rmse"]);

    let report = ok_json(&["vision", "eval", "--dataset", s(&a), "--model", s(&model), "--midpoints", "5"]);
    assert_eq!(report["n"], 20);
    for acc in report["per_class_accuracy"].as_array().unwrap() {
        assert_eq!(acc.as_f64(), Some(1.0), "{report}");
    }
    let report = ok_json(&["vision", "eval", "--dataset", s(&a)]);
    assert_eq!(report["n"], 4);
}

#[test]
fn exit_codes_separate_bad_input_from_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    assert_eq!(code(&["probe", "--tissue", "silicone", "--out", s(&csv)]), 1);
    assert_eq!(code(&["probe"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["dataset", "build", "--n", "0", "--out", s(dir.path())]), 1);
    assert_eq!(code(&["dataset", "build", "--n", "5", "--format", "gif", "--out", s(dir.path())]), 1);
    assert_eq!(code(&["serve", "--time-scale", "0"]), 1);

    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, r#"{"dt": -1}"#).unwrap();
    assert_eq!(code(&["probe", "--config", s(&cfg), "--out", s(&csv)]), 1);

    let missing = dir.path().join("no-dataset");
    assert_eq!(code(&["regressor", "train", "--dataset", s(&missing), "--out", s(&csv)]), 2);
    let unwritable = dir.path().join("missing-dir").join("run.csv");
    assert_eq!(code(&["probe", "--out", s(&unwritable), "--no-vision"]), 2);
    assert_eq!(code(&["--help"]), 0);
}
