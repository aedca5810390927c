use std::path::PathBuf;

use fuzzychain::harness::{ExperimentConfig, ExperimentKind};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_configs_load() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.engine().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 3);
}

#[test]
fn preset_files_match_built_in_defaults() {
    let dir = configs_dir();
    assert_eq!(ExperimentConfig::load(&dir.join("exp1.toml")).unwrap(), ExperimentConfig::exp1());
    assert_eq!(ExperimentConfig::load(&dir.join("exp2.toml")).unwrap(), ExperimentConfig::exp2());
}

#[test]
fn explicit_triples_are_used() {
    let cfg = ExperimentConfig::load(&configs_dir().join("adversarial.toml")).unwrap();
    assert_eq!(cfg.experiment, ExperimentKind::Custom);
    let var = cfg.linguistic_variable().unwrap();
    assert_eq!(var.len(), 7);
    assert_eq!(var.peaks(), vec![0.0, 5.0, 12.0, 22.0, 35.0, 55.0, 100.0]);
    assert_eq!(cfg.baselines, ExperimentConfig::exp1().baselines);
}
