mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use ontic::gudder::build_gudder;
use ontic::product::ContextList;

use common::{configs_dir, half_fidelity_pair};

fn audit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontic-audit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    configs_dir().join(name).display().to_string()
}

#[test]
fn bundled_configs_pass() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("validate", "validate-gudder.json"),
        ("validate", "validate-gudder-file.json"),
        ("onticity", "onticity-gudder.json"),
        ("onticity", "onticity-mkc.json"),
        ("determinate", "determinate.json"),
        ("mkc-gen", "mkc-gen.json"),
        ("antidistinguish", "antidistinguish.json"),
        ("discriminate", "discriminate.json"),
    ] {
        let out = tmp.path().join(file);
        let output = audit(&[cmd, "--config", &config(file)], &out);
        assert_eq!(
            output.status.code(),
            Some(0),
            "{cmd} {file}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        let manifest: Value =
            serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["command"], cmd);
        assert_eq!(manifest["passed"], true);
        assert!(manifest["seed"].is_u64());
        for name in manifest["outputs"].as_array().unwrap() {
            assert!(out.join(name.as_str().unwrap()).is_file());
        }
    }
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let output = audit(&["validate", "--config", "/nonexistent/config.json"], tmp.path());
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let output = audit(&["frobnicate"], tmp.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("Usage"));
}

#[test]
fn stochastic_command_without_seed_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("noseed.json");
    let mut value: Value =
        serde_json::from_str(&std::fs::read_to_string(config("validate-gudder.json")).unwrap()).unwrap();
    value.as_object_mut().unwrap().remove("seed");
    std::fs::write(&path, value.to_string()).unwrap();
    let output = audit(
        &["validate", "--config", path.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(output.status.code(), Some(2));
    // the flag supplies the missing seed
    let output = audit(
        &["validate", "--config", path.to_str().unwrap(), "--seed", "7"],
        &tmp.path().join("out"),
    );
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn corrupted_response_row_fails_and_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let (psi, phi) = half_fidelity_pair();
    let mut list = ContextList::empty(3).unwrap();
    list.ensure_containing(&psi, 2, 1).unwrap();
    list.ensure_containing(&phi, 2, 2).unwrap();
    let model = build_gudder(list, vec![("psi".into(), psi), ("phi".into(), phi)])
        .unwrap()
        .materialize(6561)
        .unwrap();
    let mut value = serde_json::to_value(&model).unwrap();
    let response = &mut value["responses"][0];
    let quantity = response["quantity"].as_str().unwrap().to_string();
    let row = response["table"][0].as_array_mut().unwrap();
    let hot = row.iter().position(|v| v.as_f64() == Some(1.0)).unwrap();
    let other = (hot + 1) % row.len();
    row[hot] = Value::from(0.99);
    row[other] = Value::from(0.01);

    std::fs::write(tmp.path().join("model.json"), value.to_string()).unwrap();
    let cfg = tmp.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 3, "validate": {"model": {"kind": "ontic_file", "path": "model.json"}}}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let output = audit(&["validate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(
        output.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["worst"]["measurement"], quantity.as_str());
    assert!(report["max_residual"].as_f64().unwrap() > 1e-4);
}

#[test]
fn uncorrupted_ontic_file_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let (psi, phi) = half_fidelity_pair();
    let mut list = ContextList::empty(3).unwrap();
    list.ensure_containing(&psi, 2, 1).unwrap();
    list.ensure_containing(&phi, 2, 2).unwrap();
    let model = build_gudder(list, vec![("psi".into(), psi), ("phi".into(), phi)])
        .unwrap()
        .materialize(6561)
        .unwrap();
    std::fs::write(
        tmp.path().join("model.json"),
        serde_json::to_string(&model).unwrap(),
    )
    .unwrap();
    let cfg = tmp.path().join("config.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 3, "validate": {"model": {"kind": "ontic_file", "path": "model.json"}, "shots": 20000}}"#,
    )
    .unwrap();
    let output = audit(
        &["validate", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stdout)
    );
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"seed": 1, "validate": {"model": {"kind": "nope"}}}"#).unwrap();
    let output = audit(
        &["validate", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("out"),
    );
    assert_eq!(output.status.code(), Some(2));
}
