//! Black-box tests of the command line binary: exit codes, summary JSON on
//! stdout, machine-readable errors on stderr, overrides and reruns.

use std::path::Path;
use std::process::{Command, Output};

use qtt_core::config::{ExperimentConfig, ExperimentKind};

fn qtt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qtt"))
}

fn small_hbt_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::calibrated(ExperimentKind::Hbt);
    cfg.run.n_pulses = 40_000;
    cfg.run.seed = 3;
    cfg.analysis.max_delay_ps = 200_000;
    cfg.analysis.g2_min_side_delay_ps = 100_000;
    cfg
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.canonical_json()).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON summary")
}

fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("stderr line is a JSON error document")
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_hbt_config());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let mut runs = Vec::new();
    for out in [&out_a, &out_b] {
        let run = qtt()
            .args(["simulate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        runs.push(run);
    }
    assert_eq!(read_dir_bytes(&out_a), read_dir_bytes(&out_b));
    assert_eq!(runs[0].stdout, runs[1].stdout);
    let summary = stdout_json(&runs[0]);
    assert_eq!(summary["kind"], "hbt");
    assert_eq!(summary["provenance"]["seed"], 3);
}

#[test]
fn overrides_reach_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_hbt_config());
    let run = qtt()
        .args(["simulate", "--seed", "9", "--pulses", "30000", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = stdout_json(&run);
    assert_eq!(summary["provenance"]["seed"], 9);
    // The override changes the effective config, so its hash moves too.
    assert_ne!(
        summary["provenance"]["config_sha256"],
        serde_json::json!(small_hbt_config().sha256_hex())
    );
}

#[test]
fn corrupt_input_reports_a_located_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qtt");
    std::fs::write(&bad, b"not a time tag stream").unwrap();
    let run = qtt()
        .args(["analyze", "--input"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(1));
    let err = stderr_error(&run);
    assert_eq!(err["error"]["kind"], "format");
    assert_eq!(err["error"]["offset"], 0);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_hbt_config()
        .canonical_json()
        .replacen('{', "{\n  \"unexpected_knob\": 1,", 1);
    let config = dir.path().join("config.json");
    std::fs::write(&config, text).unwrap();
    let run = qtt()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(1));
    let err = stderr_error(&run);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("unexpected_knob"));
}

#[test]
fn kind_specific_subcommands_reject_mismatched_configs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_hbt_config());
    let run = qtt()
        .args(["hom", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(1));
    let err = stderr_error(&run);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("does not match"));
}

#[test]
fn every_subcommand_runs_its_kind() {
    let dir = tempfile::tempdir().unwrap();

    let mut hom_cfg = ExperimentConfig::calibrated(ExperimentKind::Hom);
    hom_cfg.run.n_pulses = 30_000;
    let hom_path = dir.path().join("hom.json");
    std::fs::write(&hom_path, hom_cfg.canonical_json()).unwrap();
    let hom = qtt()
        .args(["hom", "--window-ps", "50", "--config"])
        .arg(&hom_path)
        .arg("--out")
        .arg(dir.path().join("hom"))
        .output()
        .unwrap();
    assert!(hom.status.success(), "{}", String::from_utf8_lossy(&hom.stderr));
    let hom_summary = stdout_json(&hom);
    assert_eq!(hom_summary["kind"], "hom");
    assert!(hom_summary["raw_visibility"]["value"].is_f64());

    let mut cal_cfg = ExperimentConfig::calibrated(ExperimentKind::Calibrate);
    cal_cfg.run.n_pulses = 40_000;
    cal_cfg.analysis.max_delay_ps = 100_000;
    let cal_path = dir.path().join("calibrate.json");
    std::fs::write(&cal_path, cal_cfg.canonical_json()).unwrap();
    let cal = qtt()
        .args(["calibrate", "--config"])
        .arg(&cal_path)
        .arg("--out")
        .arg(dir.path().join("cal"))
        .output()
        .unwrap();
    assert!(cal.status.success(), "{}", String::from_utf8_lossy(&cal.stderr));
    assert_eq!(stdout_json(&cal)["kind"], "calibrate");

    let design_cfg = ExperimentConfig::calibrated(ExperimentKind::Design);
    let design_path = dir.path().join("design.json");
    std::fs::write(&design_path, design_cfg.canonical_json()).unwrap();
    let design = qtt()
        .args(["design", "--config"])
        .arg(&design_path)
        .arg("--out")
        .arg(dir.path().join("design"))
        .output()
        .unwrap();
    assert!(design.status.success(), "{}", String::from_utf8_lossy(&design.stderr));
    assert_eq!(stdout_json(&design)["kind"], "design");

    let hbt_path = write_config(dir.path(), &small_hbt_config());
    let book = qtt()
        .args(["bookkeeping", "--config"])
        .arg(&hbt_path)
        .arg("--out")
        .arg(dir.path().join("book"))
        .output()
        .unwrap();
    assert!(book.status.success(), "{}", String::from_utf8_lossy(&book.stderr));
    let book_summary = stdout_json(&book);
    assert_eq!(book_summary["kind"], "bookkeeping");
    assert!(book_summary["rates_hz"]["singles_xx"].is_f64());

    let sim = qtt()
        .args(["simulate", "--config"])
        .arg(&hbt_path)
        .arg("--out")
        .arg(dir.path().join("sim"))
        .output()
        .unwrap();
    assert!(sim.status.success());
    let analyze = qtt()
        .args(["analyze", "--max-delay-ps", "200000", "--input"])
        .arg(dir.path().join("sim").join("hbt.qtt"))
        .arg("--out")
        .arg(dir.path().join("analyzed"))
        .output()
        .unwrap();
    assert!(
        analyze.status.success(),
        "{}",
        String::from_utf8_lossy(&analyze.stderr)
    );
    let analyze_summary = stdout_json(&analyze);
    assert_eq!(analyze_summary["kind"], "analyze");
    assert_eq!(
        analyze_summary["records"].as_u64().unwrap(),
        stdout_json(&sim)["singles"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .sum::<u64>()
    );
}
