//! End-to-end CLI tests: exit-code contract, output determinism, CSV
//! emission, and golden files pinning the JSON schema.
//!
//! Regenerate the goldens with `UPDATE_GOLDEN=1 cargo test -p qfock-cli`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qfock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

/// Rounds every float to 9 significant digits; the goldens pin the schema
/// and the values to meaningful precision, not the last ulp.
fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.as_i64().is_none() && n.as_u64().is_none() {
                    let rounded: f64 = format!("{f:.9e}").parse().unwrap();
                    *value = Value::from(rounded);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Zeroes the wall-clock fields, which vary run to run, and rounds floats.
fn canonicalize(mut value: Value) -> Value {
    if let Some(timing) = value.get_mut("timing").and_then(Value::as_object_mut) {
        for entry in timing.values_mut() {
            *entry = Value::from(0.0);
        }
    }
    if let Some(bench) = value.get_mut("bench").and_then(Value::as_array_mut) {
        for mode in bench {
            if let Some(obj) = mode.as_object_mut() {
                obj.insert("wall_seconds".to_string(), Value::from(0.0));
            }
        }
    }
    round_floats(&mut value);
    value
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check_golden(name: &str, args: &[&str]) {
    let output = qfock(args);
    assert!(
        output.status.success(),
        "{name}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let canonical = canonicalize(stdout_json(&output));
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, serde_json::to_string_pretty(&canonical).unwrap()).unwrap();
        return;
    }
    // canonicalize the stored side as well: serde_json's float parsing is
    // not nearest-double without the float_roundtrip feature
    let stored: Value = serde_json::from_str(
        &std::fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("missing golden {name}; run with UPDATE_GOLDEN=1")),
    )
    .unwrap();
    assert_eq!(canonical, canonicalize(stored), "golden mismatch for {name}");
}

#[test]
fn golden_verify() {
    check_golden("verify.json", &["verify", "--d", "2", "--q", "0.5", "--nmax", "3"]);
}

#[test]
fn golden_spectrum() {
    check_golden(
        "spectrum.json",
        &["spectrum", "--d", "2", "--q", "0.5", "--nmax", "3"],
    );
}

#[test]
fn golden_bound() {
    check_golden("bound.json", &["bound", "--terms", "4"]);
}

#[test]
fn golden_sweep() {
    check_golden(
        "sweep.json",
        &[
            "sweep", "--d", "2", "--q-min", "0", "--q-max", "0.44", "--steps", "2", "--nmax", "3",
        ],
    );
}

#[test]
fn golden_bench() {
    check_golden("bench.json", &["bench", "--d", "2", "--nmax", "4"]);
}

#[test]
fn reports_are_deterministic() {
    let args = ["spectrum", "--d", "2", "--q", "-0.7", "--nmax", "4"];
    let first = canonicalize(stdout_json(&qfock(&args)));
    let second = canonicalize(stdout_json(&qfock(&args)));
    assert_eq!(first, second);
}

#[test]
fn exit_zero_when_all_checks_pass() {
    let output = qfock(&["verify", "--d", "2", "--q", "0", "--nmax", "3"]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    for check in report["checks"].as_array().unwrap() {
        assert_eq!(check["pass"], Value::Bool(true), "{check}");
    }
}

#[test]
fn exit_one_on_check_failure() {
    // an absurd tolerance makes honest defects fail their thresholds
    let output = qfock(&[
        "verify", "--d", "2", "--q", "0.5", "--nmax", "4", "--tol", "1e-30",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn exit_two_on_out_of_range_q() {
    let output = qfock(&["verify", "--d", "2", "--q", "1.5", "--nmax", "4"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(output.stdout.is_empty(), "no report on usage errors");
}

#[test]
fn exit_two_on_unknown_flag() {
    let output = qfock(&["verify", "--d", "2", "--q", "0.5", "--bogus"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn exit_two_on_small_dimension() {
    let output = qfock(&["spectrum", "--d", "1", "--q", "0.5", "--nmax", "3"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn guardrail_refuses_oversized_levels() {
    let output = qfock(&["bench", "--d", "2", "--nmax", "20"]);
    assert_eq!(output.status.code(), Some(2));
    let message = String::from_utf8_lossy(&output.stderr);
    assert!(message.contains("--force"), "{message}");
}

#[test]
fn q_zero_verify_defects_are_tiny() {
    let output = qfock(&[
        "verify", "--d", "2", "--q", "0", "--nmax", "6", "--tol", "1e-14",
    ]);
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn csv_mode_writes_tables() {
    let dir = std::env::temp_dir().join(format!("qfock-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let output = qfock(&[
        "spectrum", "--d", "2", "--q", "0.5", "--nmax", "3", "--out", "csv", "--dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    assert!(report.get("spectrum").is_none(), "rows moved to the file");
    let files = report["table_files"].as_array().unwrap();
    assert_eq!(files.len(), 1);
    let contents = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    let mut lines = contents.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,alpha,lower_bound,upper_bound,contraction_factor,iterate_distance"
    );
    assert_eq!(lines.count(), 3, "one row per level");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_single_step_degenerates_to_one_report() {
    let output = qfock(&[
        "sweep", "--d", "2", "--q-min", "0", "--q-max", "0.9", "--steps", "1", "--nmax", "3",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    let rows = report["sweep"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["q"], Value::from(0.0));
    assert_eq!(rows[0]["margin"], Value::from(1.0));
}

#[test]
fn bench_modes_agree_and_blocks_touch_less() {
    let output = qfock(&["bench", "--d", "2", "--nmax", "6", "--repeat", "2"]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    let checks = report["checks"].as_array().unwrap();
    let by_name = |name: &str| {
        checks
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("check {name} present"))
            .clone()
    };
    assert_eq!(by_name("alpha_blocks_equals_dense")["pass"], Value::Bool(true));
    assert_eq!(by_name("blocks_fewer_entries")["pass"], Value::Bool(true));
    let modes = report["bench"].as_array().unwrap();
    assert_eq!(modes.len(), 2);
}

#[test]
fn bound_two_terms_matches_closed_form() {
    let output = qfock(&["bound", "--terms", "2"]);
    assert_eq!(output.status.code(), Some(0));
    let report = stdout_json(&output);
    let root = report["bound"]["root"].as_f64().unwrap();
    assert!((root - (2.0f64.sqrt() - 1.0)).abs() < 1e-7, "root {root}");
}
