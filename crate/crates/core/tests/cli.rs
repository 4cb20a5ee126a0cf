use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noma-shield"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn single_reports_precoder_and_residuals() {
    let out = run(&["single"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let f = v["f"].as_array().unwrap();
    assert_eq!(f.len(), 7);
    assert!(f.iter().all(|x| x.as_f64().unwrap() > 0.0));
    for r in v["alignment_residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() <= 1e-9);
    }
    assert!(v["eve"]["sinr_opt"].as_f64().unwrap() > 0.0);
}

#[test]
fn single_is_byte_identical_on_rerun() {
    let a = run(&["single", "--seed", "99"]);
    let b = run(&["single", "--seed", "99"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, run(&["single", "--seed", "100"]).stdout);
}

#[test]
fn too_few_antennas_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"system": {"num_pairs": 7, "antennas_per_user": 3}}"#);
    let out = run(&["single", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("N > M/2"), "{}", stderr(&out));
}

#[test]
fn unknown_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"system": {"num_pears": 7}}"#);
    let out = run(&["single", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("num_pears"));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = run(&["single", "--config", "/nonexistent/noma.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn printed_config_round_trips() {
    let out = run(&["sweep", "--print-config", "--seed", "5", "--trials", "17"]);
    assert_eq!(out.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &stdout(&out));
    let again = run(&["sweep", "--print-config", "--config", &cfg]);
    assert_eq!(out.stdout, again.stdout);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["system"]["master_seed"], 5);
    assert_eq!(v["sweep"]["trials"], 17);
}

#[test]
fn sweep_csv_has_one_row_per_grid_point() {
    let out = run(&["sweep", "--grid", "2:14:1", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], noma_shield::cli::SWEEP_HEADER);
    assert_eq!(lines.len(), 14);
    let cols = lines[0].split(',').count();
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), cols);
        assert_eq!(*cells.last().unwrap(), "20");
    }
}

#[test]
fn empty_grid_is_a_config_error() {
    let out = run(&["sweep", "--grid", "5:2:1", "--trials", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scaling_rejects_single_size() {
    let out = run(&["scaling", "--m-list", "50", "--trials", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scaling_prints_table_and_slope() {
    let out = run(&["scaling", "--m-list", "4,8,16", "--trials", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], noma_shield::cli::SCALING_HEADER);
    assert_eq!(lines.len(), 5);
    let slope: f64 = lines[4].strip_prefix("slope=").unwrap().parse().unwrap();
    assert!(slope.is_finite());
}

#[test]
fn verify_passes_with_default_sizes() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let families = v["families"].as_array().unwrap();
    assert!(families.len() >= 6);
    for f in families {
        assert!(f["instances"].as_u64().unwrap() >= 100);
        assert_eq!(f["failures"], 0);
    }
}

#[test]
fn verify_detects_injected_fault() {
    let out = run(&["verify", "--fault-inject", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("gp_diagonality"));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let gp = v["families"].as_array().unwrap().iter().find(|f| f["name"] == "gp_diagonality").unwrap();
    assert!(gp["failures"].as_u64().unwrap() > 0);
    assert!(gp["first_failing_seed"].is_u64());
}

#[test]
fn verify_report_is_deterministic() {
    let a = run(&["verify", "--seed", "3", "--trials", "20"]);
    let b = run(&["verify", "--seed", "3", "--trials", "20"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_file_gets_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("single.json");
    let out = run(&["single", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("single.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "single");
    assert!(manifest["tool_version"].is_string());
    assert_eq!(manifest["master_seed"], manifest["config"]["system"]["master_seed"]);

    // the manifest replays the run
    let replay_path = dir.path().join("replay.json");
    let replay = run(&[
        "single",
        "--config",
        dir.path().join("single.json.manifest.json").to_str().unwrap(),
        "--out",
        replay_path.to_str().unwrap(),
    ]);
    assert_eq!(replay.status.code(), Some(0));
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&replay_path).unwrap());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let out = run(&["single", "--out", "/nonexistent-dir/x/out.json"]);
    assert_eq!(out.status.code(), Some(4));
}
