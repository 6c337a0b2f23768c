//! End-to-end tests for the `spa` binary: artifact layout, determinism,
//! frozen observables, and exit-code mapping.

use std::path::Path;
use std::process::{Command, Output};

fn spa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spa"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

/// Baseline config hitting the regime where an 80/20 external/internal
/// coupling split at strong pumping yields roughly -2.7 dB observed
/// squeezing through a 0.60 external detection efficiency.
fn base_config(out: &Path) -> String {
    format!(
        r#"{{
  "device": {{ "f0_hz": 7.25e9, "g3_hz": 2e6, "g4_hz": 5e3,
               "kappa_ext_hz": 272e6, "kappa_int_hz": 68e6 }},
  "pump": {{ "n_p": 900.0, "delta_hz": 0.0 }},
  "chain": {{ "eta_cold": 0.75, "eta_hot": 0.8 }},
  "sweep": {{ "delta_start_hz": -20e6, "delta_stop_hz": 20e6,
              "delta_points": 3, "target_gains_db": [10.0, 17.5],
              "retune_mode": "zero_delta_eff" }},
  "mc": {{ "shots": 50000 }},
  "output": {{ "format": "csv", "path": "{}", "seed": 7 }}
}}"#,
        out.display()
    )
}

fn run(cfg: &Path, sub: &str) -> Output {
    spa().arg("--config").arg(cfg).arg(sub).output().unwrap()
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sweep_csv_has_comment_header_and_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let cfg = write_config(dir.path(), "cfg.json", &base_config(&out));
    assert_ok(&run(&cfg, "sweep"));

    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# power dB"));
    assert!(lines[1].starts_with("delta_hz,target_gain_db,n_p"));
    assert_eq!(lines.len(), 2 + 6, "3 detunings x 2 targets");
    assert!(text.contains("\r\n"), "RFC 4180 line endings");
    // zero-delta-eff retuning makes every detuning row identical in gain
    for line in &lines[2..] {
        assert!(line.contains(",true,"), "all targets reachable: {line}");
    }
}

#[test]
fn squeeze_reports_the_observed_level_near_minus_two_and_a_half_db() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("squeeze.csv");
    let cfg = write_config(dir.path(), "cfg.json", &base_config(&out));
    assert_ok(&run(&cfg, "squeeze"));

    let text = std::fs::read_to_string(&out).unwrap();
    let data = text.lines().nth(2).unwrap();
    let cols: Vec<&str> = data.split(',').collect();
    let s_obs_db: f64 = cols.last().unwrap().parse().unwrap();
    assert!(
        (s_obs_db - (-2.5)).abs() < 0.3,
        "observed squeezing {s_obs_db} dB should sit near -2.5 dB"
    );
}

#[test]
fn reruns_are_byte_identical_including_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.csv");
    let cfg = write_config(dir.path(), "cfg.json", &base_config(&out));
    assert_ok(&run(&cfg, "mc"));
    let first = std::fs::read(&out).unwrap();
    let first_meta = std::fs::read(dir.path().join("mc.csv.meta.json")).unwrap();

    assert_ok(&run(&cfg, "mc"));
    assert_eq!(first, std::fs::read(&out).unwrap());
    assert_eq!(first_meta, std::fs::read(dir.path().join("mc.csv.meta.json")).unwrap());
}

#[test]
fn cli_seed_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.csv");
    let cfg = write_config(dir.path(), "cfg.json", &base_config(&out));
    assert_ok(&run(&cfg, "mc"));
    let default_seed = std::fs::read(&out).unwrap();

    let reseeded = spa()
        .arg("--config").arg(&cfg)
        .arg("--seed").arg("12345")
        .arg("mc")
        .output()
        .unwrap();
    assert_ok(&reseeded);
    let other = std::fs::read(&out).unwrap();
    assert_ne!(default_seed, other, "a different seed must change the samples");

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("mc.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 12345);
}

#[test]
fn missing_config_exits_with_code_one() {
    let out = spa().arg("--config").arg("/nonexistent.json").arg("gain").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn unknown_config_key_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let body = base_config(&out_path).replace("\"n_p\"", "\"n_pump\"");
    let cfg = write_config(dir.path(), "cfg.json", &body);
    let out = run(&cfg, "gain");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
}

#[test]
fn unstable_operating_point_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    // n_p far above the parametric threshold for this coupling
    let body = base_config(&out_path).replace("\"n_p\": 900.0", "\"n_p\": 40000.0");
    let cfg = write_config(dir.path(), "cfg.json", &body);
    let out = run(&cfg, "gain");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model error"));
}

#[test]
fn unwritable_output_path_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("no-such-subdir").join("x.csv");
    // keep the pump stable so the failure is the missing directory
    let body = base_config(&out_path).replace("\"n_p\": 900.0", "\"n_p\": 100.0");
    let cfg = write_config(dir.path(), "cfg.json", &body);
    let out = run(&cfg, "gain");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("io error"));
}

#[test]
fn empty_target_list_yields_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("empty.csv");
    let body = base_config(&out_path).replace("[10.0, 17.5]", "[]");
    let cfg = write_config(dir.path(), "cfg.json", &body);
    assert_ok(&run(&cfg, "sweep"));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 2, "comment line + header only");
}

#[test]
fn json_format_parses_and_carries_the_db_convention() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.json");
    let cfg = write_config(dir.path(), "cfg.json", &base_config(&out_path));
    let out = spa()
        .arg("--config").arg(&cfg)
        .arg("--format").arg("json")
        .arg("sweep")
        .output()
        .unwrap();
    assert_ok(&out);
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert!(v["db_convention"].as_str().unwrap().contains("10*log10"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(v["rows"][0]["converged"], true);
}

#[test]
fn out_dir_env_var_redirects_the_artifact_directory() {
    let dir = tempfile::tempdir().unwrap();
    let redirect = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("gain.csv");
    let body = base_config(&out_path).replace("\"n_p\": 900.0", "\"n_p\": 100.0");
    let cfg = write_config(dir.path(), "cfg.json", &body);
    let out = spa()
        .arg("--config").arg(&cfg)
        .arg("gain")
        .env("SPA_OUT_DIR", redirect.path())
        .output()
        .unwrap();
    assert_ok(&out);
    assert!(!out_path.exists());
    assert!(redirect.path().join("gain.csv").exists());
    assert!(redirect.path().join("gain.csv.meta.json").exists());
}

#[test]
fn solve_reports_pump_strength_reproducing_the_target_gain() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("solve.csv");
    let cfg = write_config(dir.path(), "cfg.json", &base_config(&out_path));
    assert_ok(&run(&cfg, "solve"));
    let text = std::fs::read_to_string(&out_path).unwrap();
    for (line, target) in text.lines().skip(2).zip([10.0, 17.5]) {
        let cols: Vec<&str> = line.split(',').collect();
        let achieved: f64 = cols[2].parse().unwrap();
        assert!((achieved - target).abs() < 0.02, "{line}");
        assert_eq!(cols[3], "true");
    }
}
