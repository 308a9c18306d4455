//! End-to-end tests of the `suspension` binary: exit codes, output modes and
//! determinism.

use assert_cmd::Command;
use predicates::prelude::*;
use std::path::PathBuf;

fn bin() -> Command {
    Command::cargo_bin("suspension").unwrap()
}

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

#[test]
fn no_arguments_is_usage_error() {
    bin().assert().code(1).stderr(predicate::str::is_empty().not());
}

#[test]
fn unknown_flag_is_usage_error() {
    bin().args(["verify", "--no-such-flag"]).assert().code(1);
}

#[test]
fn help_succeeds() {
    bin()
        .arg("--help")
        .assert()
        .success()
        .stdout(predicate::str::contains("construct"));
}

#[test]
fn construct_writes_canonical_document_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("built.json");
    bin()
        .args(["construct", "--type", "i-oee", "--params"])
        .arg(data("requests/i-oee-generic.json"))
        .arg("--out")
        .arg(&out)
        .assert()
        .success();
    let text = std::fs::read_to_string(&out).unwrap();
    let doc = suspension_cli::document::load_suspension(&text).unwrap();
    assert_eq!(suspension_cli::document::save_suspension(&doc), text);
    bin().args(["verify", "--in"]).arg(&out).assert().success();
}

#[test]
fn construct_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        bin()
            .args(["construct", "--type", "ii-aee", "--params"])
            .arg(data("requests/ii-aee-generic.json"))
            .arg("--out")
            .arg(out)
            .assert()
            .success();
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn construct_type_mismatch_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    bin()
        .args(["construct", "--type", "ii-oee", "--params"])
        .arg(data("requests/i-oee-generic.json"))
        .arg("--out")
        .arg(dir.path().join("x.json"))
        .assert()
        .code(2)
        .stderr(predicate::str::contains("type"));
}

#[test]
fn bad_document_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": \"9\"}").unwrap();
    bin().args(["verify", "--in"]).arg(&bad).assert().code(2);
}

#[test]
fn perturbed_suspension_fails_certification() {
    bin()
        .args(["verify", "--in"])
        .arg(data("documents/i-oee-perturbed.json"))
        .assert()
        .code(3);
}

#[test]
fn verify_json_reports_verdict() {
    bin()
        .args(["--json", "verify", "--in"])
        .arg(data("documents/i-oee-generic.json"))
        .assert()
        .success()
        .stdout(predicate::str::contains("\"flexible\": true"));
}

#[test]
fn quiet_mode_suppresses_stdout() {
    bin()
        .args(["--quiet", "verify", "--in"])
        .arg(data("documents/i-oee-generic.json"))
        .assert()
        .success()
        .stdout(predicate::str::is_empty());
}

#[test]
fn exhausted_search_is_build_failure_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let req = dir.path().join("req.json");
    std::fs::write(
        &req,
        r#"{
            "schema_version": "1",
            "type": "iii-oas",
            "m": 3,
            "seeds": [{"l1": 1.0, "m1": 1.0, "l2": 1.0, "m2": 1.0, "L_odd": [1.0, 1.0]}],
            "search_budget": 0,
            "refine_iters": 0
        }"#,
    )
    .unwrap();
    bin()
        .args(["--json", "construct", "--type", "iii-oas", "--params"])
        .arg(&req)
        .arg("--out")
        .arg(dir.path().join("x.json"))
        .assert()
        .code(4)
        .stdout(predicate::str::contains("\"status\": \"build-failure\""));
}

#[test]
fn trace_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    bin()
        .args(["trace", "--samples", "9", "--in"])
        .arg(data("documents/ii-oee-generic.json"))
        .arg("--out")
        .arg(&out)
        .assert()
        .success();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("z[length],gap[length],volume[length^3],feasible"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn export_writes_frames_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    bin()
        .args(["export", "--frames", "3", "--in"])
        .arg(data("documents/i-oee-equal.json"))
        .arg("--dir")
        .arg(dir.path())
        .assert()
        .success();
    assert!(dir.path().join("frame_000.obj").exists());
    assert!(dir.path().join("manifest.csv").exists());
}

#[test]
fn rank_reports_flexible_dimension() {
    bin()
        .args(["--json", "rank", "--z", "0.9", "--in"])
        .arg(data("documents/i-oee-generic.json"))
        .assert()
        .success()
        .stdout(predicate::str::contains("\"flex_dim\""));
}

#[test]
fn rank_rejects_pinched_ring() {
    // The bundled third-family specimen has a coincident vertex pair.
    bin()
        .args(["rank", "--z", "0.7", "--in"])
        .arg(data("documents/iii-oas.json"))
        .assert()
        .code(2)
        .stderr(predicate::str::contains("coincident"));
}

#[test]
fn fold_check_finds_two_flat_states() {
    bin()
        .args(["fold-check", "--in"])
        .arg(data("documents/iii-oas.json"))
        .assert()
        .success()
        .stdout(predicate::str::contains("flat state").count(2));
}

#[test]
fn fold_check_rejects_first_family() {
    bin()
        .args(["fold-check", "--in"])
        .arg(data("documents/i-oee-generic.json"))
        .assert()
        .code(2);
}
