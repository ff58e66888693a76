//! Binary-level contract: exit codes, report files, and byte-identical
//! reruns.

use std::process::{Command, Output};

fn sqpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqpc"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn successful_run_exits_zero_with_valid_json() {
    let out = sqpc(&["run", "--L", "8", "--x", "5", "--y", "5", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "run");
    assert_eq!(doc["seed"], 42);
    assert_eq!(doc["report"]["verdict"], "Equal");
}

#[test]
fn unequal_secrets_still_exit_zero() {
    let out = sqpc(&["run", "--L", "8", "--x", "5", "--y", "6", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["report"]["verdict"], "NotEqual");
}

#[test]
fn detected_attack_exits_two() {
    let out = sqpc(&[
        "run", "--L", "16", "--x", "1", "--y", "1", "--attack", "measure-resend-z", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["report"]["verdict"]["Aborted"].is_object());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sqpc(&["oracle", "--attack", "bogus"]).status.code(), Some(1));
    assert_eq!(sqpc(&["run", "--L", "8"]).status.code(), Some(1));
    assert_eq!(sqpc(&["no-such-command"]).status.code(), Some(1));
    // Secret too wide for L.
    assert_eq!(
        sqpc(&["run", "--L", "4", "--x", "16", "--y", "0", "--seed", "1"])
            .status
            .code(),
        Some(1)
    );
    let err = sqpc(&["oracle", "--attack", "bogus"]);
    let message = String::from_utf8_lossy(&err.stderr);
    assert!(message.contains("unknown attack"));
    assert!(message.contains("measure-resend-z"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(sqpc(&["--help"]).status.code(), Some(0));
    assert_eq!(sqpc(&["--version"]).status.code(), Some(0));
}

#[test]
fn oracle_reports_the_known_figures() {
    let out = sqpc(&["oracle", "--attack", "measure-resend-z"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let average = doc["report"]["average_detection"].as_f64().unwrap();
    assert!((average - 0.4375).abs() < 1e-12);
}

#[test]
fn sqkd_subcommand_delivers_a_key() {
    let out = sqpc(&["sqkd", "--L", "16", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let key = doc["report"]["Established"]["key"].as_array().unwrap();
    assert_eq!(key.len(), 16);
}

#[test]
fn fixed_key_source_is_accepted() {
    let out = sqpc(&[
        "run",
        "--L",
        "8",
        "--x",
        "3",
        "--y",
        "3",
        "--key-source",
        "fixed:a5",
        "--seed",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // a5 = 10100101, LSB first.
    let k: Vec<u64> = doc["report"]["key_material"]["k_bc"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(k, vec![1, 0, 1, 0, 0, 1, 0, 1]);
    assert_eq!(
        sqpc(&["run", "--L", "8", "--x", "0", "--y", "0", "--key-source", "fixed:xyz", "--seed", "1"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn out_and_csv_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    let csv_path = dir.path().join("cases.csv");
    let out = sqpc(&[
        "run",
        "--L",
        "8",
        "--x",
        "1",
        "--y",
        "2",
        "--seed",
        "5",
        "--out",
        json_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let file_bytes = std::fs::read(&json_path).unwrap();
    assert_eq!(file_bytes, out.stdout, "file copy matches stdout");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("case,rounds,error_rate\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "attack-sweep",
        "--attack",
        "intercept-resend:+0",
        "--samples",
        "20000",
        "--seed",
        "99",
    ];
    let first = sqpc(&args);
    let second = sqpc(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);

    // Different worker counts cannot perturb the bytes either.
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    let serial = sqpc(&threaded);
    assert_eq!(first.stdout, serial.stdout);
}
