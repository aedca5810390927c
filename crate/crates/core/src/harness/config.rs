//! Experiment configuration, loaded from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::WeightDistribution;
use crate::consensus::{ByzantineModel, ConsensusEngine};
use crate::fuzzy::LinguisticVariable;
use crate::metrics::Granularity;
use crate::registry::ReputationParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Exp1,
    Exp2,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Universe {
    pub lo: f64,
    pub hi: f64,
}

/// Labels and census. `triples` switches from the uniform layout to explicit
/// `(a, b, c)` membership functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub labels: Vec<String>,
    pub population: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub participants: usize,
    pub rounds: u64,
    /// Rounds of the fuzzy consensus run used in the comparison.
    pub fuzzy_rounds: u64,
    pub pow_power: WeightDistribution,
    pub pos_stake: WeightDistribution,
    pub dpos_stake: WeightDistribution,
    pub dpos_reputation: WeightDistribution,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            participants: 100,
            rounds: 100,
            fuzzy_rounds: 500,
            pow_power: WeightDistribution::Pareto { shape: 0.8, scale: 1.0 },
            pos_stake: WeightDistribution::Pareto { shape: 1.5, scale: 1.0 },
            dpos_stake: WeightDistribution::Pareto { shape: 3.0, scale: 1.0 },
            dpos_reputation: WeightDistribution::Uniform { lo: 0.5, hi: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Round counts to sweep.
    pub rounds: Vec<u64>,
    pub repetitions: u32,
    pub universe: Universe,
    pub partition: PartitionConfig,
    pub reputation: ReputationParams,
    pub commission: f64,
    pub byzantine_rate: f64,
    pub invalid_block_rate: f64,
    pub txs_per_block: usize,
    /// Granularity of the fuzzy consensus frequency tables and metrics.
    pub granularity: Granularity,
    /// Repetitions (from the first) whose per-round records go to the audit log.
    pub audit_repetitions: u32,
    pub baselines: BaselineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::exp1()
    }
}

impl ExperimentConfig {
    pub fn exp1() -> Self {
        Self {
            experiment: ExperimentKind::Exp1,
            seed: 42,
            rounds: vec![100, 200, 300, 400, 500],
            repetitions: 20,
            universe: Universe { lo: 0.0, hi: 10.0 },
            partition: PartitionConfig {
                labels: ["VL", "L", "M", "H", "VH"].map(String::from).to_vec(),
                population: vec![500, 300, 150, 30, 10],
                triples: None,
            },
            reputation: ReputationParams::default(),
            commission: 0.05,
            byzantine_rate: 0.0,
            invalid_block_rate: 0.0,
            txs_per_block: 1,
            granularity: Granularity::PerLabel,
            audit_repetitions: 1,
            baselines: BaselineConfig::default(),
        }
    }

    pub fn exp2() -> Self {
        Self { experiment: ExperimentKind::Exp2, repetitions: 1, ..Self::exp1() }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse { path: path.display().to_string(), source },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|source| ConfigError::Parse { path: "<input>".into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn linguistic_variable(&self) -> Result<LinguisticVariable, String> {
        let p = &self.partition;
        let result = match &p.triples {
            None => LinguisticVariable::uniform("stake", p.labels.iter().cloned(), self.universe.lo, self.universe.hi),
            Some(t) => {
                let triples: Vec<(f64, f64, f64)> = t.iter().map(|&[a, b, c]| (a, b, c)).collect();
                LinguisticVariable::from_functions("stake", p.labels.iter().cloned(), self.universe.lo, self.universe.hi, &triples)
            }
        };
        result.map_err(|e| e.to_string())
    }

    pub fn engine(&self) -> Result<ConsensusEngine, String> {
        let var = self.linguistic_variable()?;
        let byz = ByzantineModel::new(self.byzantine_rate).map_err(|e| e.to_string())?;
        Ok(ConsensusEngine::new(var, self.reputation, byz, self.commission))
    }

    /// Collects every problem, one message per offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.rounds.is_empty() {
            errs.push("rounds: at least one round count is required".to_string());
        }
        if self.rounds.contains(&0) {
            errs.push("rounds: every round count must be >= 1".to_string());
        }
        if self.repetitions == 0 {
            errs.push("repetitions: must be >= 1".to_string());
        }
        if let Err(e) = self.linguistic_variable() {
            errs.push(format!("partition: {e}"));
        }
        if self.partition.population.len() != self.partition.labels.len() {
            errs.push(format!(
                "partition.population: {} entries for {} labels",
                self.partition.population.len(),
                self.partition.labels.len()
            ));
        } else if self.partition.population.iter().sum::<usize>() == 0 {
            errs.push("partition.population: at least one validator is required".to_string());
        }
        if let Err(e) = self.reputation.validate() {
            errs.push(format!("reputation: {e}"));
        }
        if !(self.commission >= 0.0 && self.commission.is_finite()) {
            errs.push(format!("commission: must be >= 0, got {}", self.commission));
        }
        for (name, v) in [("byzantine_rate", self.byzantine_rate), ("invalid_block_rate", self.invalid_block_rate)] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name}: must lie in [0, 1], got {v}"));
            }
        }
        let b = &self.baselines;
        if b.participants == 0 {
            errs.push("baselines.participants: must be >= 1".to_string());
        }
        if b.rounds == 0 || b.fuzzy_rounds == 0 {
            errs.push("baselines.rounds / baselines.fuzzy_rounds: must be >= 1".to_string());
        }
        for (name, d) in [
            ("baselines.pow_power", &b.pow_power),
            ("baselines.pos_stake", &b.pos_stake),
            ("baselines.dpos_stake", &b.dpos_stake),
            ("baselines.dpos_reputation", &b.dpos_reputation),
        ] {
            if let Err(e) = d.validate() {
                errs.push(format!("{name}: {e}"));
            }
        }
        if let WeightDistribution::Uniform { hi, .. } | WeightDistribution::Constant { value: hi } = b.dpos_reputation {
            if hi > 1.0 {
                errs.push("baselines.dpos_reputation: reputations must not exceed 1".to_string());
            }
        }
        if let WeightDistribution::Pareto { .. } = b.dpos_reputation {
            errs.push("baselines.dpos_reputation: must be bounded (uniform or constant)".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::exp1().validate().unwrap();
        ExperimentConfig::exp2().validate().unwrap();
        assert_eq!(ExperimentConfig::exp1().partition.population.iter().sum::<usize>(), 990);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::exp1();
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = ExperimentConfig::from_toml("experiment = \"custom\"\nseed = 7\nrounds = [50]\n").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Custom);
        assert_eq!(cfg.rounds, vec![50]);
        assert_eq!(cfg.partition.labels.len(), 5);
    }

    #[test]
    fn field_level_errors() {
        let text = "rounds = []\nrepetitions = 0\n[partition]\nlabels = [\"A\", \"B\"]\npopulation = [1]\n";
        let err = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("rounds:"), "{err}");
        assert!(err.contains("repetitions:"), "{err}");
        assert!(err.contains("odd label count required"), "{err}");
        assert!(err.contains("partition.population"), "{err}");
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1"), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn explicit_triples() {
        let text = r#"
[partition]
labels = ["low", "mid", "high"]
population = [5, 5, 5]
triples = [[0.0, 0.0, 2.0], [0.0, 2.0, 10.0], [2.0, 10.0, 10.0]]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.linguistic_variable().unwrap().peaks(), vec![0.0, 2.0, 10.0]);
    }
}
