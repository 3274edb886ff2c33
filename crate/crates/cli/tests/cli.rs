use std::path::Path;
use std::process::Command;

use serde_json::Value;
use stylus_cli::{execute, Command as Sub, RunConfig};

const UNITS: &str = r#""units": {"length": "um", "voltage": "V", "frequency": "Hz"}"#;

fn stylus(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stylus")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, format!("{{{UNITS}{body}}}")).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn default_config_round_trips() {
    let cfg = RunConfig::default().resolved().unwrap();
    let back = RunConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn schema_violations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for body in [
        r#", "extra": 1"#,
        r#", "geometry": {"preset": 1, "inline": {"electrodes": [], "delta_h_um": 0, "h_rf_um": 0}}"#,
        r#", "geometry": {"preset": 7}"#,
        r#", "solver": {"resolution": 4, "tolerance": 1}"#,
        r#", "dc": {"voltages": {"rf": 1.0}}"#,
    ] {
        let cfg = write_config(dir.path(), body);
        let out = stylus(&["sense", "--config", &cfg, "--out", d]);
        assert_eq!(out.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let p = dir.path().join("units.json");
    std::fs::write(&p, r#"{"units": {"length": "mm", "voltage": "V", "frequency": "Hz"}}"#).unwrap();
    assert_eq!(stylus(&["sense", "--config", p.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    let missing = stylus(&["sense", "--config", "/nonexistent/run.json"]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn missing_compensation_rods_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#", "geometry": {"preset": 1, "compensation_electrodes": false}, "solver": {"resolution": 2}"#);
    let out = stylus(&["compensate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sense_reports_force_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let out = stylus(&["sense", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("force 0.4596 yN/sqrt(Hz)"));
    let v = read_json(&dir.path().join("sense.json"));
    let f = v["budget"]["force_N_per_rtHz"].as_f64().unwrap();
    assert!((f / 0.46e-24 - 1.0).abs() < 0.02);
    assert!(v["config"]["units"]["length"] == "um");
}

#[test]
fn csv_output_has_config_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = stylus(&["mirror", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("mirror.csv")).unwrap();
    assert!(csv.starts_with("quantity,value\n"));
    assert!(csv.contains("dipole_collection_efficiency,0.9446"));
    let cfg = RunConfig::load(&dir.path().join("mirror.config.json")).unwrap();
    assert_eq!(cfg.output.dir, dir.path());
}

#[test]
fn embedded_config_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let first = stylus(&["solid-angle", "--rays", "200000", "--seed", "9", "--out", a.to_str().unwrap()]);
    assert!(first.status.success());
    let report = read_json(&a.join("solid-angle.json"));
    let mut cfg = report["config"].clone();
    cfg["output"]["dir"] = Value::String(b.to_string_lossy().into_owned());
    let cfg_path = dir.path().join("again.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert!(stylus(&["solid-angle", "--config", cfg_path.to_str().unwrap()]).status.success());
    let mut second = read_json(&b.join("solid-angle.json"));
    second["config"]["output"] = report["config"]["output"].clone();
    assert_eq!(second, report);
    assert_eq!(report["raycast"]["rays"], 200000);
}

#[test]
fn solid_angle_hit_map_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = stylus(&["solid-angle", "--rays", "100000", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("hit_map.csv")).unwrap();
    assert!(csv.starts_with("theta,phi,blocked_by\n"));
    assert_eq!(csv.lines().count(), 10_001);
    assert!(csv.contains(",rf\n") && csv.contains(",none\n"));
}

#[test]
fn contour_on_preset3_has_closed_isolines() {
    let cfg = RunConfig::from_json(&format!(r#"{{{UNITS}, "geometry": {{"preset": 3, "compensation_electrodes": false}}}}"#))
        .unwrap()
        .resolved()
        .unwrap();
    let out = execute(Sub::Contour, &cfg).unwrap();
    assert!(out.json["closed_around_minimum"].as_u64().unwrap() >= 7);
    assert!(out.csv[0].1.starts_with("curve_id,level_ev,closed,x_um,z_um\n"));
}

#[test]
fn analyze_csv_row() {
    let cfg = RunConfig::from_json(&format!(r#"{{{UNITS}, "geometry": {{"preset": 2, "compensation_electrodes": false}}}}"#))
        .unwrap()
        .resolved()
        .unwrap();
    let out = execute(Sub::Analyze, &cfg).unwrap();
    let rows: Vec<&str> = out.csv[0].1.lines().collect();
    assert!(rows[0].starts_with("protrusion_height_um,distance_h_um,axial_mhz"));
    assert!(rows[1].starts_with("250,"));
    assert!(out.json["report"]["trap_depth_mev"].as_f64().unwrap() > 0.0);
}

#[test]
fn compensate_cancels_configured_stray_field() {
    let cfg = RunConfig::from_json(&format!(r#"{{{UNITS}, "dc": {{"stray_field_v_per_m": [10, 0, 5]}}}}"#)).unwrap().resolved().unwrap();
    let out = execute(Sub::Compensate, &cfg).unwrap();
    assert!(out.json["solution"]["residual_norm"].as_f64().unwrap() < 0.1);
    assert_eq!(out.json["scan_compensated"]["compensated"], true);
    assert_eq!(out.json["scan_uncompensated"]["compensated"], false);
    assert_eq!(out.csv.len(), 2);
}
