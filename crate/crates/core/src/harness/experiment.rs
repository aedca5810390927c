//! Experiment drivers: the fuzzy consensus round sweep and the comparison
//! against PoW, PoS and DPoS.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, ExperimentKind};
use super::seeds::{derive_rng, Stream};
use crate::baselines::{self, BaselineError};
use crate::consensus::{ConsensusEngine, ConsensusError, RoundOutcome};
use crate::fuzzy::LinguisticVariable;
use crate::ledger::{build_block, Amount, Block, Chain, Transaction};
use crate::metrics::{self, FrequencyTable, Granularity, MetricsError, MetricsReport};
use crate::registry::{Registry, RegistryError, ValidatorId};

pub const FUZZYCHAIN: &str = "fuzzychain";
pub const POW: &str = "pow";
pub const POS: &str = "pos";
pub const DPOS: &str = "dpos";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("round {round} of run ({rounds} rounds, repetition {repetition}): {source}")]
    Round { rounds: u64, repetition: u32, round: u64, source: ConsensusError },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("nothing to emit: the report holds no frequency tables")]
    NothingToEmit,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

/// One frequency table from one (algorithm, round count, repetition) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRecord {
    pub algorithm: String,
    pub rounds: u64,
    pub repetition: u32,
    pub table: FrequencyTable,
}

/// Per-key statistics across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub algorithm: String,
    pub rounds: u64,
    pub key: String,
    pub mean: f64,
    pub std: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub algorithm: String,
    pub rounds: u64,
    pub granularity: Granularity,
    pub per_repetition: Vec<MetricsReport>,
    pub mean_gini: f64,
    pub mean_skewness: Option<f64>,
    pub mean_kurtosis_excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub rounds: u64,
    pub repetition: u32,
    #[serde(flatten)]
    pub outcome: RoundOutcome,
}

/// Ledger and population bookkeeping for one consensus run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub rounds: u64,
    pub repetition: u32,
    pub chain_length: usize,
    pub accepted_rounds: u64,
    pub expelled: usize,
    pub census_start: Vec<usize>,
    pub census_end: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub labels: Vec<String>,
    pub trusted_sets_required: usize,
    pub tables: Vec<TableRecord>,
    pub aggregates: Vec<Aggregate>,
    pub metrics: Vec<MetricsRecord>,
    pub runs: Vec<RunStats>,
    #[serde(skip)]
    pub audit: Vec<AuditRecord>,
}

impl RunReport {
    pub fn tables_for<'a>(&'a self, algorithm: &'a str, rounds: u64) -> impl Iterator<Item = &'a TableRecord> + 'a {
        self.tables.iter().filter(move |t| t.algorithm == algorithm && t.rounds == rounds)
    }

    pub fn metrics_for(&self, algorithm: &str) -> Option<&MetricsRecord> {
        self.metrics.iter().find(|m| m.algorithm == algorithm)
    }
}

/// Registry with `population[i]` validators whose stakes fall uniformly inside
/// the interval where label `i` wins, so the initial census is exact.
pub fn build_population(
    var: &LinguisticVariable,
    population: &[usize],
    seed: u64,
    path: &[u64],
) -> Result<Registry, RegistryError> {
    let mut stake_rng = derive_rng(seed, Stream::Stakes, path);
    let mut key_rng = derive_rng(seed, Stream::Keys, path);
    let mut registry = Registry::new();
    for (label, &count) in population.iter().enumerate() {
        let (left, right) = var.dominant_interval(label);
        for _ in 0..count {
            // stay clear of the lower crossover, which belongs to the label below
            let margin = if label == 0 { 0.0 } else { 1e-6 * (right - left) };
            let stake = stake_rng.gen_range(left + margin..=right);
            registry.admit(stake, var, &mut key_rng)?;
        }
    }
    Ok(registry)
}

/// Block of signed transfers between random active validators. With
/// probability `invalid_rate` it is corrupted (tampered transfer or broken
/// linkage) so the reject path gets exercised.
fn propose_block<R: Rng>(
    chain: &Chain,
    registry: &Registry,
    txs: usize,
    invalid_rate: f64,
    clock: u64,
    nonce: &mut u64,
    rng: &mut R,
) -> Block {
    let active: Vec<ValidatorId> = registry.active().map(|v| v.id).collect();
    let mut transactions = Vec::with_capacity(txs);
    for _ in 0..txs {
        let from = active[rng.gen_range(0..active.len())];
        let to = active[rng.gen_range(0..active.len())];
        let keys = registry.keys(from).expect("active ids are registered");
        let recipient = registry.get(to).expect("active ids are registered").verify_key.clone();
        *nonce += 1;
        let amount = Amount::from_units(rng.gen_range(0.0..1.0));
        transactions.push(Transaction::new(keys.verify_key(), recipient, amount, *nonce).sign(keys));
    }
    let corrupt = rng.gen_bool(invalid_rate);
    let tamper_tx = rng.gen_bool(0.5) && !transactions.is_empty();
    if corrupt && tamper_tx {
        transactions[0].amount.0 += 1;
    }
    let mut block = build_block(chain.tip(), transactions, clock);
    if corrupt && !tamper_tx {
        block.prev_hash[0] ^= 0xff;
        block.hash = block.compute_hash().expect("bounded block");
    }
    block
}

/// Result of one consensus simulation.
#[derive(Debug, Clone)]
pub struct ConsensusRun {
    pub label_counts: FrequencyTable,
    pub participant_counts: FrequencyTable,
    pub stats: RunStats,
    pub audit: Vec<RoundOutcome>,
}

/// A fresh population, its chain and random streams, advanced one round at a
/// time.
#[derive(Debug, Clone)]
pub struct Simulation {
    engine: ConsensusEngine,
    txs_per_block: usize,
    invalid_block_rate: f64,
    registry: Registry,
    chain: Chain,
    selection: ChaCha8Rng,
    votes: ChaCha8Rng,
    blocks: ChaCha8Rng,
    label_counts: FrequencyTable,
    participant_counts: FrequencyTable,
    census_start: Vec<usize>,
    nonce: u64,
    round: u64,
    accepted_rounds: u64,
}

impl Simulation {
    /// `path` selects the derived random streams.
    pub fn new(cfg: &ExperimentConfig, engine: ConsensusEngine, path: &[u64]) -> Result<Self, HarnessError> {
        let var = &engine.var;
        let registry = build_population(var, &cfg.partition.population, cfg.seed, path)?;
        Ok(Self {
            txs_per_block: cfg.txs_per_block,
            invalid_block_rate: cfg.invalid_block_rate,
            census_start: registry.census(var.len()),
            label_counts: FrequencyTable::zeroed(Granularity::PerLabel, var.labels().iter()),
            participant_counts: FrequencyTable::zeroed(
                Granularity::PerParticipant,
                registry.validators().iter().map(|v| v.id.0),
            ),
            registry,
            chain: Chain::new(),
            selection: derive_rng(cfg.seed, Stream::Selection, path),
            votes: derive_rng(cfg.seed, Stream::Votes, path),
            blocks: derive_rng(cfg.seed, Stream::Blocks, path),
            nonce: 0,
            round: 0,
            accepted_rounds: 0,
            engine,
        })
    }

    /// Proposes a block and runs the next round on it.
    pub fn step(&mut self) -> Result<RoundOutcome, ConsensusError> {
        if self.registry.active_count() == 0 {
            return Err(ConsensusError::NoPanel);
        }
        let round = self.round + 1;
        let block = propose_block(
            &self.chain,
            &self.registry,
            self.txs_per_block,
            self.invalid_block_rate,
            round,
            &mut self.nonce,
            &mut self.blocks,
        );
        let outcome = self.engine.run_round(
            &mut self.registry,
            &mut self.chain,
            block,
            round,
            &mut self.selection,
            &mut self.votes,
        )?;
        self.round = round;
        self.label_counts.increment(outcome.winner_label);
        self.participant_counts.increment(outcome.winner.0 as usize);
        self.accepted_rounds += u64::from(outcome.appended);
        Ok(outcome)
    }

    pub fn rounds_run(&self) -> u64 {
        self.round
    }

    pub fn engine(&self) -> &ConsensusEngine {
        &self.engine
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn label_counts(&self) -> &FrequencyTable {
        &self.label_counts
    }

    pub fn participant_counts(&self) -> &FrequencyTable {
        &self.participant_counts
    }

    pub fn stats(&self, repetition: u32) -> RunStats {
        RunStats {
            rounds: self.round,
            repetition,
            chain_length: self.chain.len(),
            accepted_rounds: self.accepted_rounds,
            expelled: self.registry.len() - self.registry.active_count(),
            census_start: self.census_start.clone(),
            census_end: self.registry.census(self.engine.var.len()),
        }
    }
}

/// Runs `rounds` consecutive rounds on a fresh population.
pub fn simulate(
    cfg: &ExperimentConfig,
    engine: &ConsensusEngine,
    rounds: u64,
    repetition: u32,
    path: &[u64],
    keep_audit: bool,
) -> Result<ConsensusRun, HarnessError> {
    let mut sim = Simulation::new(cfg, engine.clone(), path)?;
    let mut audit = Vec::new();
    for round in 1..=rounds {
        let outcome = sim.step().map_err(|source| HarnessError::Round { rounds, repetition, round, source })?;
        if keep_audit {
            audit.push(outcome);
        }
    }
    Ok(ConsensusRun {
        stats: sim.stats(repetition),
        label_counts: sim.label_counts,
        participant_counts: sim.participant_counts,
        audit,
    })
}

fn pick_table(run: &ConsensusRun, granularity: Granularity) -> FrequencyTable {
    match granularity {
        Granularity::PerLabel => run.label_counts.clone(),
        Granularity::PerParticipant => run.participant_counts.clone(),
    }
}

fn aggregates_of(tables: &[TableRecord]) -> Vec<Aggregate> {
    let mut groups: Vec<(String, u64)> = Vec::new();
    for t in tables {
        let key = (t.algorithm.clone(), t.rounds);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut out = Vec::new();
    for (algorithm, rounds) in groups {
        let runs: Vec<&TableRecord> = tables.iter().filter(|t| t.algorithm == algorithm && t.rounds == rounds).collect();
        for (k, (key, _)) in runs[0].table.entries.iter().enumerate() {
            let counts: Vec<u64> = runs.iter().map(|t| t.table.entries[k].1).collect();
            let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            out.push(Aggregate {
                algorithm: algorithm.clone(),
                rounds,
                key: key.clone(),
                mean: metrics::mean(&xs),
                std: metrics::std_dev(&xs),
                min: *counts.iter().min().expect("at least one repetition"),
                max: *counts.iter().max().expect("at least one repetition"),
            });
        }
    }
    out
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let xs: Option<Vec<f64>> = values.collect();
    xs.filter(|v| !v.is_empty()).map(|v| metrics::mean(&v))
}

fn metrics_of(tables: &[TableRecord], algorithm: &str, rounds: u64) -> Result<MetricsRecord, HarnessError> {
    let runs: Vec<&TableRecord> = tables.iter().filter(|t| t.algorithm == algorithm && t.rounds == rounds).collect();
    let per_repetition = runs.iter().map(|t| t.table.metrics()).collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsRecord {
        algorithm: algorithm.to_string(),
        rounds,
        granularity: runs[0].table.granularity,
        mean_gini: metrics::mean(&per_repetition.iter().map(|m| m.gini).collect::<Vec<_>>()),
        mean_skewness: mean_of(per_repetition.iter().map(|m| m.skewness)),
        mean_kurtosis_excess: mean_of(per_repetition.iter().map(|m| m.kurtosis_excess)),
        per_repetition,
    })
}

fn validated(cfg: &ExperimentConfig) -> Result<ConsensusEngine, HarnessError> {
    cfg.validate()?;
    cfg.engine().map_err(|e| HarnessError::Config(ConfigError::Invalid(vec![e])))
}

/// Round sweep: for every configured round count and repetition, a fresh
/// population runs that many rounds and the winners' labels are counted.
/// Also used for custom configurations.
pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let engine = validated(cfg)?;
    let jobs: Vec<(u64, u32)> = cfg
        .rounds
        .iter()
        .flat_map(|&r| (0..cfg.repetitions).map(move |rep| (r, rep)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(rounds, rep)| {
            simulate(cfg, &engine, rounds, rep, &[1, rounds, u64::from(rep)], rep < cfg.audit_repetitions)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut tables = Vec::with_capacity(results.len());
    let mut runs = Vec::with_capacity(results.len());
    let mut audit = Vec::new();
    for (&(rounds, repetition), run) in jobs.iter().zip(results) {
        tables.push(TableRecord { algorithm: FUZZYCHAIN.into(), rounds, repetition, table: pick_table(&run, cfg.granularity) });
        audit.extend(run.audit.into_iter().map(|outcome| AuditRecord { rounds, repetition, outcome }));
        runs.push(run.stats);
    }
    let metrics = cfg
        .rounds
        .iter()
        .map(|&r| metrics_of(&tables, FUZZYCHAIN, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunReport {
        config: cfg.clone(),
        labels: engine.var.labels().to_vec(),
        trusted_sets_required: engine.trusted_sets_required(),
        aggregates: aggregates_of(&tables),
        tables,
        metrics,
        runs,
        audit,
    })
}

/// PoW, PoS and DPoS over freshly drawn participants, alongside a fuzzy
/// consensus run over the configured population, once per repetition.
pub fn run_experiment2(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let engine = validated(cfg)?;
    let b = &cfg.baselines;
    let results = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<_, HarnessError> {
            let r = u64::from(rep);
            let mut draw = derive_rng(cfg.seed, Stream::Baselines, &[2, r, 0]);
            let miners = baselines::miners_from(b.participants, &b.pow_power, &mut draw);
            let stakers = baselines::stake_validators_from(b.participants, &b.pos_stake, &mut draw);
            let delegates = baselines::delegates_from(b.participants, &b.dpos_stake, &b.dpos_reputation, &mut draw);
            let pow = baselines::run_pow(&miners, b.rounds, &mut derive_rng(cfg.seed, Stream::Baselines, &[2, r, 1]))?;
            let pos = baselines::run_pos(&stakers, b.rounds, &mut derive_rng(cfg.seed, Stream::Baselines, &[2, r, 2]))?;
            let dpos = baselines::run_dpos(&delegates, b.rounds, &mut derive_rng(cfg.seed, Stream::Baselines, &[2, r, 3]))?;
            let fuzzy = simulate(cfg, &engine, b.fuzzy_rounds, rep, &[2, b.fuzzy_rounds, r], rep < cfg.audit_repetitions)?;
            Ok((pow, pos, dpos, fuzzy))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut tables = Vec::new();
    let mut runs = Vec::new();
    let mut audit = Vec::new();
    for (rep, (pow, pos, dpos, fuzzy)) in results.into_iter().enumerate() {
        let repetition = rep as u32;
        for (algorithm, rounds, table) in [(POW, b.rounds, pow), (POS, b.rounds, pos), (DPOS, b.rounds, dpos)] {
            tables.push(TableRecord { algorithm: algorithm.into(), rounds, repetition, table });
        }
        tables.push(TableRecord {
            algorithm: FUZZYCHAIN.into(),
            rounds: b.fuzzy_rounds,
            repetition,
            table: pick_table(&fuzzy, cfg.granularity),
        });
        audit.extend(fuzzy.audit.into_iter().map(|outcome| AuditRecord { rounds: b.fuzzy_rounds, repetition, outcome }));
        runs.push(fuzzy.stats);
    }
    let metrics = vec![
        metrics_of(&tables, POW, b.rounds)?,
        metrics_of(&tables, POS, b.rounds)?,
        metrics_of(&tables, DPOS, b.rounds)?,
        metrics_of(&tables, FUZZYCHAIN, b.fuzzy_rounds)?,
    ];
    Ok(RunReport {
        config: cfg.clone(),
        labels: engine.var.labels().to_vec(),
        trusted_sets_required: engine.trusted_sets_required(),
        aggregates: aggregates_of(&tables),
        tables,
        metrics,
        runs,
        audit,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    match cfg.experiment {
        ExperimentKind::Exp1 | ExperimentKind::Custom => run_experiment1(cfg),
        ExperimentKind::Exp2 => run_experiment2(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::exp1();
        cfg.rounds = vec![30];
        cfg.repetitions = 2;
        cfg.partition.population = vec![20, 15, 10, 5, 3];
        cfg
    }

    #[test]
    fn population_census_is_exact() {
        let cfg = ExperimentConfig::exp1();
        let var = cfg.linguistic_variable().unwrap();
        let reg = build_population(&var, &cfg.partition.population, 1, &[0]).unwrap();
        assert_eq!(reg.census(5), vec![500, 300, 150, 30, 10]);
    }

    #[test]
    fn sweep_shapes() {
        let report = run_experiment1(&small()).unwrap();
        assert_eq!(report.tables.len(), 2);
        assert!(report.tables.iter().all(|t| t.table.total() == 30));
        assert_eq!(report.aggregates.len(), 5);
        assert_eq!(report.audit.len(), 30);
        assert_eq!(report.trusted_sets_required, 2);
        assert!(report.runs.iter().all(|r| r.chain_length == 31));
    }

    #[test]
    fn reject_path_keeps_chain_consistent() {
        let mut cfg = small();
        cfg.invalid_block_rate = 0.5;
        cfg.audit_repetitions = 2;
        let report = run_experiment1(&cfg).unwrap();
        for stats in &report.runs {
            assert_eq!(stats.chain_length as u64, 1 + stats.accepted_rounds);
            assert!(stats.accepted_rounds < 30);
        }
        assert!(report.audit.iter().any(|a| !a.outcome.block_valid));
    }

    #[test]
    fn byzantine_votes_lower_reputations() {
        let mut cfg = small();
        cfg.byzantine_rate = 0.2;
        let report = run_experiment1(&cfg).unwrap();
        assert!(report
            .audit
            .iter()
            .flat_map(|a| &a.outcome.reputation_changes)
            .any(|c| c.after < c.before));
    }

    #[test]
    fn participant_granularity() {
        let mut cfg = small();
        cfg.granularity = Granularity::PerParticipant;
        let report = run_experiment1(&cfg).unwrap();
        assert_eq!(report.tables[0].table.entries.len(), 53);
        assert_eq!(report.metrics[0].granularity, Granularity::PerParticipant);
    }

    #[test]
    fn invalid_config_is_a_config_error() {
        let mut cfg = small();
        cfg.repetitions = 0;
        assert!(run_experiment1(&cfg).unwrap_err().is_config());
    }
}
