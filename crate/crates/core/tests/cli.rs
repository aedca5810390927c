use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
experiment = "custom"
seed = 5
rounds = [15]
repetitions = 2

[partition]
labels = ["VL", "L", "M", "H", "VH"]
population = [20, 12, 8, 4, 2]
"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuzzychain")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn custom_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy();
    let o = cli(&["run", "custom", "--config", &config, "--out", &out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("fuzzychain"));
    for name in ["frequencies.csv", "summary.json", "audit.jsonl"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let o = cli(&["report", &out_s]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed: 5"));
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = cli(&[
        "run", "custom", "--config", &config, "--rounds", "5,7", "--reps", "1", "--seed", "9",
        "--granularity", "per-participant", "--out", &out.to_string_lossy(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 9);
    assert_eq!(summary["config"]["rounds"], serde_json::json!([5, 7]));
    assert_eq!(summary["fuzzychain_granularity"], "per-participant");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field = write(dir.path(), "a.toml", "sed = 1\n");
    let bad_value = write(dir.path(), "b.toml", &SMALL.replace("repetitions = 2", "repetitions = 0\nbyzantine_rate = 2.0"));
    let missing = dir.path().join("missing.toml").to_string_lossy().into_owned();
    for config in [&bad_field, &bad_value, &missing] {
        let o = cli(&["run", "custom", "--config", config, "--out", &dir.path().join("o").to_string_lossy()]);
        assert_eq!(o.status.code(), Some(1), "{config}");
    }
    let o = cli(&["run", "custom", "--config", &bad_value]);
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("repetitions") && stderr.contains("byzantine_rate"), "{stderr}");

    assert_eq!(cli(&["run", "exp1", "--reps", "zero"]).status.code(), Some(1));
    assert_eq!(cli(&["run", "exp1", "--reps", "0"]).status.code(), Some(1));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.toml", SMALL);
    // the output directory path is an existing file
    let blocker = write(dir.path(), "blocker", "");
    let o = cli(&["run", "custom", "--config", &config, "--out", &blocker]);
    assert_eq!(o.status.code(), Some(2));

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["report", &empty.path().to_string_lossy()]).status.code(), Some(2));
}
