use std::fs;
use std::path::{Path, PathBuf};

use carleson::cli::{run, AnalysisConfig, Report, ReproduceReport};
use serde_json::Value;
use tempfile::TempDir;

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn cli(config: Option<&Path>, out: &Path, extra: &[&str]) -> i32 {
    let mut args: Vec<String> = vec!["carleson".into(), "--out".into(), out.display().to_string()];
    if let Some(c) = config {
        args.extend(["--config".into(), c.display().to_string()]);
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

fn report(out: &Path) -> Report {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

const HEAT: &str = r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10000}}},
    "exponents": {"p": 2.0, "alpha": 0.0}, "operations": ["admissibility"]}"#;

#[test]
fn heat_analysis_is_admissible() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "heat.json", HEAT);
    assert_eq!(cli(Some(&config), dir.path(), &["analyze"]), 0);
    let r = report(dir.path());
    assert_eq!(r.verdicts[0].classification, "admissible");
    let constant = r.results[0].result["criterion_constant"].as_f64().unwrap();
    assert!((constant - 0.101321).abs() < 1e-6);
    assert_eq!(r.tool.name, "carleson");
    // Timing is the last block.
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(text.rfind("\"timing\"").unwrap() > text.rfind("\"warnings\"").unwrap());
}

#[test]
fn parabolic_analysis_is_not_admissible() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "p.json",
        r#"{"problem": {"system": {"builtin": {"name": "parabolic-2n", "modes": 60}}}, "exponents": {"p": 2, "alpha": -0.5}}"#,
    );
    assert_eq!(cli(Some(&config), dir.path(), &["analyze"]), 0);
    assert_eq!(report(dir.path()).verdicts[0].classification, "not_admissible");
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad_alpha = write_config(
        dir.path(),
        "a.json",
        r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10}}}, "exponents": {"p": 2, "alpha": 1}}"#,
    );
    assert_eq!(cli(Some(&bad_alpha), dir.path(), &["analyze"]), 2);
    let unknown = write_config(
        dir.path(),
        "u.json",
        r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10}}}, "extra": true}"#,
    );
    assert_eq!(cli(Some(&unknown), dir.path(), &["analyze"]), 2);
    assert_eq!(cli(None, dir.path(), &["analyze"]), 2);
    assert_eq!(cli(Some(&dir.path().join("missing.json")), dir.path(), &["analyze"]), 2);
    assert_eq!(run(["carleson", "frobnicate"]), 2);
    let needs_system = write_config(
        dir.path(),
        "m.json",
        r#"{"problem": {"measure": {"atomic": {"atoms": [{"location": [1, 0], "mass": 1}]}}}, "exponents": {"p": 2, "q": 2}}"#,
    );
    assert_eq!(cli(Some(&needs_system), dir.path(), &["analyze"]), 2);
    let heat = write_config(dir.path(), "heat.json", HEAT);
    assert_eq!(cli(Some(&heat), dir.path(), &["--threads", "0", "analyze"]), 2);
    assert_eq!(cli(Some(&heat), dir.path(), &["--tol=-1", "analyze"]), 2);
}

#[test]
fn numerical_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "n.json",
        r#"{"problem": {"measure": {"atomic": {"atoms": [{"location": [0, 1], "mass": 1}]}}},
            "exponents": {"p": 2, "q": 2}, "operations": ["tree"], "grids": {"centers": [[1, 0]]}}"#,
    );
    assert_eq!(cli(Some(&config), dir.path(), &["analyze"]), 3);
}

#[test]
fn tolerance_flag_is_recorded() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "heat.json", HEAT);
    assert_eq!(cli(Some(&config), dir.path(), &["--tol", "1e-9", "analyze"]), 0);
    assert_eq!(report(dir.path()).config.tolerances.quadrature, 1e-9);
}

#[test]
fn echoed_config_has_every_default() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "heat.json", HEAT);
    assert_eq!(cli(Some(&config), dir.path(), &["analyze"]), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let echoed = v["config"].as_object().unwrap();
    for key in ["problem", "weight", "exponents", "operations", "grids", "kernel", "space", "signal", "sweep", "tolerances", "output"] {
        assert!(echoed.contains_key(key), "missing {key}");
    }
    assert_eq!(v["config"]["tolerances"]["quadrature"].as_f64(), Some(1e-10));
    let reparsed = AnalysisConfig::from_json(&v["config"].to_string()).unwrap();
    assert_eq!(reparsed, report(dir.path()).config);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["p", "alpha", "beta", "sup", "slope", "classification"]
    );
    reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn single_cell_sweep_matches_analyze() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "heat.json", HEAT);
    assert_eq!(cli(Some(&config), dir.path(), &["analyze"]), 0);
    assert_eq!(cli(Some(&config), dir.path(), &["sweep"]), 0);
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    let verdict = &report(dir.path()).results[0].result;
    let row = &rows[0];
    assert_eq!(row[0].parse::<f64>().unwrap(), 2.0);
    assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(row[2].parse::<f64>().unwrap(), verdict["beta"].as_f64().unwrap());
    assert_eq!(row[3].parse::<f64>().unwrap(), verdict["criterion_constant"].as_f64().unwrap());
    assert_eq!(row[4].parse::<f64>().unwrap(), verdict["slope"].as_f64().unwrap());
    assert_eq!(row[5], "admissible");
}

#[test]
fn heat_sweep_boundary() {
    let dir = TempDir::new().unwrap();
    let p: Vec<String> = (0..19).map(|k| format!("{}", (110 + 5 * k) as f64 / 100.0)).collect();
    let config = write_config(
        dir.path(),
        "sweep.json",
        &format!(
            r#"{{"problem": {{"system": {{"builtin": {{"name": "heat-neumann", "modes": 10000}}}}}},
                "grids": {{"p": [{}], "alpha": [-0.5, -0.25, 0.0, 0.25, 0.5, 0.75]}}}}"#,
            p.join(", ")
        ),
    );
    assert_eq!(cli(Some(&config), dir.path(), &["--threads", "3", "sweep"]), 0);
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 19 * 6);
    let boundary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("boundary.json")).unwrap()).unwrap();
    for point in boundary["boundary"].as_array().unwrap() {
        let alpha = point["alpha"].as_f64().unwrap();
        let exact = 4.0 / 3.0 * (alpha + 1.0);
        match point["p"].as_f64() {
            // Smallest grid point at or above the exact threshold.
            Some(p) => assert!(p >= exact - 1e-12 && p < exact.max(1.1) + 0.05 + 1e-12, "alpha {alpha}: {p}"),
            None => assert!(exact > 2.0),
        }
    }
    // Cells with alpha >= p - 1 are reported, not dropped.
    assert!(rows.iter().any(|r| r[5] == "not_applicable" && r[2].is_empty()));
}

#[test]
fn parabolic_sweep_changes_sign_at_minus_one() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "ps.json",
        r#"{"problem": {"system": {"builtin": {"name": "parabolic-2n", "modes": 60}}},
            "grids": {"p": [2.0], "alpha": [-1.5, -1.25, -1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5]}}"#,
    );
    assert_eq!(cli(Some(&config), dir.path(), &["sweep"]), 0);
    for row in csv_rows(&dir.path().join("sweep.csv")) {
        let alpha: f64 = row[1].parse().unwrap();
        let expected = if alpha <= -1.0 { "admissible" } else { "not_admissible" };
        assert_eq!(row[5], expected, "alpha {alpha}");
    }
}

#[test]
fn sweep_budget() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "b.json",
        r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10}}},
            "grids": {"p": [1.5, 2.0, 2.5], "alpha": [0.0, 0.1]}, "sweep": {"max_cells": 5}}"#,
    );
    assert_eq!(cli(Some(&config), dir.path(), &["sweep"]), 2);
}

#[test]
fn csv_floats_round_trip() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "heat.json", HEAT);
    assert_eq!(cli(Some(&config), dir.path(), &["sweep"]), 0);
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    let sup: f64 = rows[0][3].parse().unwrap();
    assert_eq!(sup, 1.0 / (std::f64::consts::PI * std::f64::consts::PI));
}

fn reproduce_report(out: &Path) -> ReproduceReport {
    serde_json::from_str(&fs::read_to_string(out.join("reproduce.json")).unwrap()).unwrap()
}

#[test]
fn reproduce_default_passes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cli(None, dir.path(), &["reproduce"]), 0);
    let r = reproduce_report(dir.path());
    assert_eq!(r.criteria.len(), 10);
    assert!(r.all_passed);
}

#[test]
fn reproduce_negative_controls() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cli(None, dir.path(), &["reproduce", "--heat-modes", "500", "--inject-wrong-beta"]), 1);
    let r = reproduce_report(dir.path());
    assert!(!r.criteria[0].passed);
    assert_eq!(cli(None, dir.path(), &["reproduce", "--heat-modes", "500", "--parabolic-modes", "10"]), 1);
    let r = reproduce_report(dir.path());
    assert!(!r.criteria[1].passed);
    assert!(r.criteria[1].detail.contains("inconclusive"));
    assert!(r.criteria[0].passed);
}

#[test]
fn example_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let dir = TempDir::new().unwrap();
            let command = if path.file_name().unwrap().to_string_lossy().contains("sweep") { "sweep" } else { "analyze" };
            assert_eq!(cli(Some(&path), dir.path(), &[command]), 0, "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
