//! Exit codes and file round trips of the `oddcap` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn oddcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oddcap")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name);
    path.to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oddcap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_passes_records() {
    let out = oddcap(&["verify", &fixture("g5_7.cert"), &fixture("g3_15.cert")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("G(5,7) >= 350") && text.contains("G(3,15) >= 381"));
}

#[test]
fn overclaiming_fails_verification() {
    let text = std::fs::read_to_string(fixture("g4_11.cert")).unwrap().replace("claim 748", "claim 749");
    let path = scratch("overclaim.cert");
    std::fs::write(&path, text).unwrap();
    let out = oddcap(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupted_file_names_the_line() {
    let path = scratch("corrupt.cert");
    std::fs::write(&path, "p 7\nd 2\nclaim 1\n0 x\n").unwrap();
    let out = oddcap(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("line 4"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(oddcap(&[]).status.code(), Some(2));
    assert_eq!(oddcap(&["exact", "--p", "3", "--d", "2"]).status.code(), Some(2));
}

#[test]
fn oversized_instance_trips_the_guard() {
    assert_eq!(oddcap(&["exact", "--p", "15", "--d", "5"]).status.code(), Some(3));
}

#[test]
fn exact_certificate_verifies() {
    let path = scratch("c7_3.cert");
    let out = oddcap(&[
        "exact", "--p", "7", "--d", "3", "--generator", "1,2,3", "--seed", "1", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let weight: u64 = text
        .split("= ")
        .nth(1)
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|w| w.parse().ok())
        .expect("exact prints the optimum");
    let out = oddcap(&["--format", "structured", "verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = &reports[0]["report"];
    assert_eq!(report["verdict"], "Pass");
    assert_eq!(report["size"], weight);
}
