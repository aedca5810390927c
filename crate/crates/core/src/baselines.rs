//! PoW, PoS and DPoS winner-selection simulators.
//!
//! Each produces a per-participant [`FrequencyTable`] of round winners so
//! that its inequality can be compared with the fuzzy selection.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{FrequencyTable, Granularity};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("no participants")]
    NoParticipants,
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("participant {id}: {what} must be positive and finite, got {value}")]
    NonPositive { id: u32, what: &'static str, value: f64 },
    #[error("participant {id}: reputation must lie in (0, 1], got {value}")]
    Reputation { id: u32, value: f64 },
    #[error("invalid distribution: {0}")]
    Distribution(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Miner {
    pub id: u32,
    pub hash_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StakeValidator {
    pub id: u32,
    pub stake: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delegate {
    pub id: u32,
    pub stake: f64,
    pub reputation: f64,
}

/// Distribution of participant weights (hash power, stake, or reputation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightDistribution {
    Pareto { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl WeightDistribution {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let ok = match *self {
            WeightDistribution::Pareto { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            WeightDistribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi,
            WeightDistribution::Constant { value } => value.is_finite() && value > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(BaselineError::Distribution(format!("{self:?}")))
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match *self {
            WeightDistribution::Pareto { shape, scale } => scale * (1.0 - u).powf(-1.0 / shape),
            WeightDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            WeightDistribution::Constant { value } => value,
        }
    }

    /// `n` quantile-spaced weights: the midpoint of each of `n`
    /// equal-probability strata mapped through the quantile function, then
    /// shuffled. The population keeps the distribution's shape without a
    /// single extreme draw deciding a whole run.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let mut out: Vec<f64> = (0..n).map(|i| self.quantile((i as f64 + 0.5) / n as f64)).collect();
        out.shuffle(rng);
        out
    }
}

fn check_run(len: usize, rounds: u64) -> Result<(), BaselineError> {
    if len == 0 {
        return Err(BaselineError::NoParticipants);
    }
    if rounds == 0 {
        return Err(BaselineError::NoRounds);
    }
    Ok(())
}

fn positive(id: u32, what: &'static str, value: f64) -> Result<(), BaselineError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(BaselineError::NonPositive { id, what, value })
    }
}

fn table(ids: impl Iterator<Item = u32>) -> FrequencyTable {
    FrequencyTable::zeroed(Granularity::PerParticipant, ids)
}

/// Exponential race: every miner's solve time is `Exp(hash_power)` and the
/// fastest wins, so miner `i` wins with probability `p_i / sum p`.
pub fn run_pow<R: Rng + ?Sized>(miners: &[Miner], rounds: u64, rng: &mut R) -> Result<FrequencyTable, BaselineError> {
    check_run(miners.len(), rounds)?;
    let clocks = miners
        .iter()
        .map(|m| {
            positive(m.id, "hash_power", m.hash_power)?;
            Exp::new(m.hash_power).map_err(|e| BaselineError::Distribution(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut freq = table(miners.iter().map(|m| m.id));
    for _ in 0..rounds {
        let mut best = (0, f64::INFINITY);
        for (i, clock) in clocks.iter().enumerate() {
            let t = clock.sample(rng);
            if t < best.1 {
                best = (i, t);
            }
        }
        freq.increment(best.0);
    }
    Ok(freq)
}

fn run_weighted<R: Rng + ?Sized>(
    ids: impl Iterator<Item = u32>,
    weights: Vec<f64>,
    rounds: u64,
    rng: &mut R,
) -> Result<FrequencyTable, BaselineError> {
    let dist = WeightedIndex::new(&weights).map_err(|e| BaselineError::Distribution(e.to_string()))?;
    let mut freq = table(ids);
    for _ in 0..rounds {
        freq.increment(dist.sample(rng));
    }
    Ok(freq)
}

/// Winner drawn with probability `stake_i / sum stake`.
pub fn run_pos<R: Rng + ?Sized>(
    validators: &[StakeValidator],
    rounds: u64,
    rng: &mut R,
) -> Result<FrequencyTable, BaselineError> {
    check_run(validators.len(), rounds)?;
    for v in validators {
        positive(v.id, "stake", v.stake)?;
    }
    run_weighted(validators.iter().map(|v| v.id), validators.iter().map(|v| v.stake).collect(), rounds, rng)
}

/// Winner drawn with probability proportional to `stake * reputation`.
/// Reputations stay fixed for the whole run.
pub fn run_dpos<R: Rng + ?Sized>(delegates: &[Delegate], rounds: u64, rng: &mut R) -> Result<FrequencyTable, BaselineError> {
    check_run(delegates.len(), rounds)?;
    for d in delegates {
        positive(d.id, "stake", d.stake)?;
        if !(d.reputation > 0.0 && d.reputation <= 1.0) {
            return Err(BaselineError::Reputation { id: d.id, value: d.reputation });
        }
    }
    let weights = delegates.iter().map(|d| d.stake * d.reputation).collect();
    run_weighted(delegates.iter().map(|d| d.id), weights, rounds, rng)
}

pub fn miners_from<R: Rng + ?Sized>(n: usize, power: &WeightDistribution, rng: &mut R) -> Vec<Miner> {
    power
        .sample(n, rng)
        .into_iter()
        .enumerate()
        .map(|(i, hash_power)| Miner { id: i as u32, hash_power })
        .collect()
}

pub fn stake_validators_from<R: Rng + ?Sized>(n: usize, stake: &WeightDistribution, rng: &mut R) -> Vec<StakeValidator> {
    stake
        .sample(n, rng)
        .into_iter()
        .enumerate()
        .map(|(i, stake)| StakeValidator { id: i as u32, stake })
        .collect()
}

pub fn delegates_from<R: Rng + ?Sized>(
    n: usize,
    stake: &WeightDistribution,
    reputation: &WeightDistribution,
    rng: &mut R,
) -> Vec<Delegate> {
    let stakes = stake.sample(n, rng);
    let reps = reputation.sample(n, rng);
    stakes
        .into_iter()
        .zip(reps)
        .enumerate()
        .map(|(i, (stake, reputation))| Delegate { id: i as u32, stake, reputation: reputation.min(1.0) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(21)
    }

    fn share(t: &FrequencyTable, i: usize) -> f64 {
        t.entries[i].1 as f64 / t.total() as f64
    }

    #[test]
    fn lone_miner_wins_every_round() {
        let t = run_pow(&[Miner { id: 0, hash_power: 2.0 }], 50, &mut rng()).unwrap();
        assert_eq!(t.entries, vec![("0".to_string(), 50)]);
    }

    #[test]
    fn pow_race_matches_power_share() {
        let miners = [Miner { id: 0, hash_power: 3.0 }, Miner { id: 1, hash_power: 1.0 }];
        let t = run_pow(&miners, 100_000, &mut rng()).unwrap();
        assert!((share(&t, 0) - 0.75).abs() < 0.01);
    }

    #[test]
    fn pos_matches_stake_share() {
        let even: Vec<_> = (0..4).map(|id| StakeValidator { id, stake: 5.0 }).collect();
        let t = run_pos(&even, 100_000, &mut rng()).unwrap();
        for i in 0..4 {
            assert!((share(&t, i) - 0.25).abs() < 0.01);
        }
        let skew = [StakeValidator { id: 0, stake: 9.0 }, StakeValidator { id: 1, stake: 1.0 }];
        let t = run_pos(&skew, 10_000, &mut rng()).unwrap();
        assert!((share(&t, 0) - 0.9).abs() < 0.02);
    }

    #[test]
    fn dpos_uses_stake_times_reputation() {
        let same: Vec<_> = (0..3).map(|id| Delegate { id, stake: 2.0, reputation: 0.7 }).collect();
        let t = run_dpos(&same, 30_000, &mut rng()).unwrap();
        for i in 0..3 {
            assert!((share(&t, i) - 1.0 / 3.0).abs() < 0.02);
        }
        let pair = [Delegate { id: 0, stake: 10.0, reputation: 0.5 }, Delegate { id: 1, stake: 5.0, reputation: 1.0 }];
        let t = run_dpos(&pair, 10_000, &mut rng()).unwrap();
        assert!((share(&t, 0) - 0.5).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(run_pos(&[], 10, &mut rng()), Err(BaselineError::NoParticipants));
        assert_eq!(run_pow(&[Miner { id: 0, hash_power: 1.0 }], 0, &mut rng()), Err(BaselineError::NoRounds));
        assert!(run_pow(&[Miner { id: 0, hash_power: 0.0 }], 1, &mut rng()).is_err());
        assert!(run_dpos(&[Delegate { id: 0, stake: 1.0, reputation: 0.0 }], 1, &mut rng()).is_err());
        assert!(WeightDistribution::Pareto { shape: 0.0, scale: 1.0 }.validate().is_err());
    }

    #[test]
    fn sample_takes_stratum_midpoints() {
        let d = WeightDistribution::Uniform { lo: 1.0, hi: 2.0 };
        let mut xs = d.sample(10, &mut rng());
        xs.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            assert!((x - (1.05 + i as f64 / 10.0)).abs() < 1e-12, "{x} is not midpoint {i}");
        }
        let p = WeightDistribution::Pareto { shape: 1.5, scale: 1.0 }.sample(100, &mut rng());
        assert!(p.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn counts_sum_to_rounds_and_are_seeded() {
        let miners = miners_from(100, &WeightDistribution::Pareto { shape: 1.5, scale: 1.0 }, &mut rng());
        let a = run_pow(&miners, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = run_pow(&miners, 100, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.total(), 100);
        assert_eq!(a, b);
    }
}
