//! End-to-end checks of the `tsqt` binary: exit codes, output formats,
//! determinism.

use std::process::{Command, Output};

fn tsqt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsqt"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn list_names_the_six_builtins() {
    let out = tsqt(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text
        .lines()
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(
        names,
        vec![
            "three_box_x",
            "three_box_q",
            "three_box_xq",
            "three_box_xqx",
            "spin_dispersion",
            "empty_ensemble"
        ]
    );
}

#[test]
fn builtin_run_passes_and_emits_json() {
    let out = tsqt(&[
        "run",
        "three_box_x",
        "--samples",
        "5000",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["scenario"], "three_box_x");
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["queries"][0]["type"], "abl");
    assert_eq!(doc["queries"][0]["probabilities"][1], 1.0);
}

#[test]
fn machine_output_is_byte_identical_across_runs() {
    let args = ["run", "three_box_xq", "--samples", "5000", "--format", "json"];
    let first = tsqt(&args);
    let second = tsqt(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn gated_and_ungated_agree_on_every_defined_value() {
    let gated = tsqt(&[
        "run", "three_box_xq", "--samples", "2000", "--format", "json", "--mode", "gated",
    ]);
    let ungated = tsqt(&[
        "run", "three_box_xq", "--samples", "2000", "--format", "json", "--mode", "ungated",
    ]);
    let gated: serde_json::Value = serde_json::from_slice(&gated.stdout).unwrap();
    let ungated: serde_json::Value = serde_json::from_slice(&ungated.stdout).unwrap();
    let queries = gated["queries"].as_array().unwrap();
    for (g, u) in queries.iter().zip(ungated["queries"].as_array().unwrap()) {
        if g["type"] == "counterfactual"
            && g["defined"] == true
            && u["defined"] == true
        {
            assert_eq!(g["value"], u["value"]);
        }
    }
}

#[test]
fn every_builtin_passes_with_default_style_options() {
    for name in [
        "three_box_x",
        "three_box_q",
        "three_box_xq",
        "three_box_xqx",
        "spin_dispersion",
        "empty_ensemble",
    ] {
        let out = tsqt(&["run", name, "--samples", "20000"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name} failed:\n{}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}

#[test]
fn failing_expectation_exits_one() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/failing.json");
    let out = tsqt(&["run", path, "--samples", "1000"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"), "table should flag the failure:\n{text}");
}

#[test]
fn missing_scenario_exits_two() {
    let out = tsqt(&["run", "no_such_scenario.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn scenario_files_run_from_disk_like_builtins() {
    // A builtin saved to disk and run by path gives the same verdicts.
    let builtin = tsqt(&["run", "empty_ensemble", "--samples", "3000", "--format", "json"]);
    let dir = std::env::temp_dir().join(format!("tsqt-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("empty_ensemble.json");
    let source = tsqt::scenario::find_builtin("empty_ensemble").unwrap().source();
    std::fs::write(&path, source).unwrap();
    let from_disk = tsqt(&[
        "run",
        path.to_str().unwrap(),
        "--samples",
        "3000",
        "--format",
        "json",
    ]);
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(builtin.status.code(), Some(0));
    assert_eq!(builtin.stdout, from_disk.stdout);
}
