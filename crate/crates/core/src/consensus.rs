//! Per-round consensus: panel selection, voting, and settlement.
//!
//! Each round runs three phases over the registry:
//!
//! 1. **Scaling.** Labels are re-derived from the current stakes.
//! 2. **Selection.** Every fuzzy set contributes a quota of panel members:
//!    one from each of the lower `n - 2` sets and two from each of the top
//!    two. The first round draws uniformly. Later rounds first build a
//!    candidate pool per set (up to two uniform picks from the
//!    full-reputation subset plus one reputation-weighted pick from the whole
//!    set) and then draw the quota uniformly from that pool.
//! 3. **Voting.** Members vote on the block. The majority side is
//!    successful, the minority unsuccessful, and one successful member wins
//!    the commission.
//!
//! Panels are always odd, so the tally can never tie. When empty or small
//! sets would leave an even panel, one extra member is taken from the
//! highest set with spare validators, or failing that one pick is dropped
//! from the lowest set that contributed.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{check_label_count, FuzzyError, LinguisticVariable};
use crate::ledger::{Block, BlockRejection, Chain};
use crate::registry::{
    apply_commission, apply_exclusion, update_reputation, Outcome, Registry, RegistryError,
    ReputationParams, Validator, ValidatorId,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("no panel could be formed: every fuzzy set is empty")]
    NoPanel,
    #[error("tally received an even number of votes ({0})")]
    EvenVoteCount(usize),
    #[error("no successful validator to reward")]
    NoSuccessful,
    #[error("byzantine rate must lie in [0, 1], got {0}")]
    ByzantineRate(f64),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// Minimum number of trusted fuzzy sets for secure operation with `n` sets.
pub fn trusted_sets_required(n: usize) -> Result<usize, ConsensusError> {
    check_label_count(n)?;
    Ok((n - 2) / 2 + 1)
}

/// Panel seats owed by the set at zero-based `index` out of `n`.
pub fn quota(index: usize, n: usize) -> usize {
    if index + 2 >= n {
        2
    } else {
        1
    }
}

/// Seats taken from each set after capping by availability and parity repair.
pub fn seat_counts(group_sizes: &[usize]) -> Result<Vec<usize>, ConsensusError> {
    let n = group_sizes.len();
    let mut seats: Vec<usize> = group_sizes.iter().enumerate().map(|(i, &s)| quota(i, n).min(s)).collect();
    let total: usize = seats.iter().sum();
    if total == 0 {
        return Err(ConsensusError::NoPanel);
    }
    if total.is_multiple_of(2) {
        if let Some(i) = (0..n).rev().find(|&i| group_sizes[i] > seats[i]) {
            seats[i] += 1;
        } else {
            let i = (0..n).find(|&i| seats[i] > 0).expect("total is positive");
            seats[i] -= 1;
        }
    }
    Ok(seats)
}

/// What selection needs to know about a validator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: ValidatorId,
    pub reputation: f64,
}

impl Candidate {
    fn is_full(&self) -> bool {
        self.reputation >= 1.0 - crate::fuzzy::DEGREE_TOLERANCE
    }
}

impl From<&Validator> for Candidate {
    fn from(v: &Validator) -> Self {
        Self { id: v.id, reputation: v.reputation }
    }
}

/// Active candidates per label, lowest label first.
pub fn candidate_groups(registry: &Registry, label_count: usize) -> Vec<Vec<Candidate>> {
    registry
        .groups(label_count)
        .into_iter()
        .map(|g| g.into_iter().map(Candidate::from).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelMember {
    pub id: ValidatorId,
    pub label_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Panel {
    pub round: u64,
    pub members: Vec<PanelMember>,
}

impl Panel {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn label_of(&self, id: ValidatorId) -> Option<usize> {
        self.members.iter().find(|m| m.id == id).map(|m| m.label_index)
    }
}

fn draw_uniform<R: Rng + ?Sized>(pool: &[Candidate], k: usize, rng: &mut R) -> Vec<Candidate> {
    sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect()
}

/// One reputation-proportional pick; falls back to uniform when every weight is zero.
fn draw_weighted<R: Rng + ?Sized>(pool: &[Candidate], rng: &mut R) -> Candidate {
    match WeightedIndex::new(pool.iter().map(|c| c.reputation.max(0.0))) {
        Ok(dist) => pool[dist.sample(rng)],
        Err(_) => pool[rng.gen_range(0..pool.len())],
    }
}

/// Splits a set into the full-reputation subset and the whole set.
pub fn build_subsets(group: &[Candidate]) -> (Vec<Candidate>, Vec<Candidate>) {
    let a = group.iter().copied().filter(Candidate::is_full).collect();
    (a, group.to_vec())
}

/// Candidate pool for one set: up to two uniform from the full-reputation
/// subset, one weighted by reputation from the whole set, deduplicated.
/// Extra weighted picks from the rest of the set top the pool up to `seats`.
pub fn reputation_pool<R: Rng + ?Sized>(group: &[Candidate], seats: usize, rng: &mut R) -> Vec<Candidate> {
    let (a, b) = build_subsets(group);
    let mut pool = draw_uniform(&a, a.len().min(2), rng);
    if b.is_empty() {
        return pool;
    }
    let pick = draw_weighted(&b, rng);
    if !pool.iter().any(|c| c.id == pick.id) {
        pool.push(pick);
    }
    while pool.len() < seats {
        let rest: Vec<Candidate> = b.iter().copied().filter(|c| !pool.iter().any(|p| p.id == c.id)).collect();
        if rest.is_empty() {
            break;
        }
        pool.push(draw_weighted(&rest, rng));
    }
    pool
}

fn assemble<R, F>(groups: &[Vec<Candidate>], round: u64, rng: &mut R, mut pick: F) -> Result<Panel, ConsensusError>
where
    R: Rng + ?Sized,
    F: FnMut(&[Candidate], usize, &mut R) -> Vec<Candidate>,
{
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let seats = seat_counts(&sizes)?;
    let mut members = Vec::with_capacity(seats.iter().sum());
    for (label_index, (group, &k)) in groups.iter().zip(&seats).enumerate() {
        if k == 0 {
            continue;
        }
        members.extend(pick(group, k, rng).into_iter().map(|c| PanelMember { id: c.id, label_index }));
    }
    Ok(Panel { round, members })
}

/// First-round selection: uniform draws without replacement from each set.
pub fn select_first_round<R: Rng + ?Sized>(
    groups: &[Vec<Candidate>],
    round: u64,
    rng: &mut R,
) -> Result<Panel, ConsensusError> {
    assemble(groups, round, rng, |g, k, rng| draw_uniform(g, k, rng))
}

/// Reputation-aware selection used from the second round on.
pub fn select_round_j<R: Rng + ?Sized>(
    groups: &[Vec<Candidate>],
    round: u64,
    rng: &mut R,
) -> Result<Panel, ConsensusError> {
    assemble(groups, round, rng, |g, k, rng| {
        let pool = reputation_pool(g, k, rng);
        draw_uniform(&pool, k, rng)
    })
}

/// Dispatches on the round number (rounds count from 1).
pub fn select_panel<R: Rng + ?Sized>(
    groups: &[Vec<Candidate>],
    round: u64,
    rng: &mut R,
) -> Result<Panel, ConsensusError> {
    if round <= 1 {
        select_first_round(groups, round, rng)
    } else {
        select_round_j(groups, round, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    Accepted,
    Rejected,
}

impl Vote {
    fn inverted(self) -> Self {
        match self {
            Vote::Accepted => Vote::Rejected,
            Vote::Rejected => Vote::Accepted,
        }
    }
}

/// Each member independently inverts the honest vote with probability `byzantine_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByzantineModel {
    pub byzantine_rate: f64,
}

impl Default for ByzantineModel {
    fn default() -> Self {
        Self { byzantine_rate: 0.0 }
    }
}

impl ByzantineModel {
    pub fn new(byzantine_rate: f64) -> Result<Self, ConsensusError> {
        if !(0.0..=1.0).contains(&byzantine_rate) {
            return Err(ConsensusError::ByzantineRate(byzantine_rate));
        }
        Ok(Self { byzantine_rate })
    }
}

pub fn cast_votes<R: Rng + ?Sized>(
    panel: &Panel,
    block_is_valid: bool,
    model: &ByzantineModel,
    rng: &mut R,
) -> Vec<(ValidatorId, Vote)> {
    let honest = if block_is_valid { Vote::Accepted } else { Vote::Rejected };
    let rate = model.byzantine_rate.clamp(0.0, 1.0);
    panel
        .members
        .iter()
        .map(|m| {
            let vote = if rng.gen_bool(rate) { honest.inverted() } else { honest };
            (m.id, vote)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub decision: Vote,
    pub successful: Vec<ValidatorId>,
    pub unsuccessful: Vec<ValidatorId>,
}

/// Strict majority over an odd number of votes.
pub fn tally(votes: &[(ValidatorId, Vote)]) -> Result<Tally, ConsensusError> {
    if votes.len().is_multiple_of(2) {
        return Err(ConsensusError::EvenVoteCount(votes.len()));
    }
    let accepted = votes.iter().filter(|(_, v)| *v == Vote::Accepted).count();
    let decision = if 2 * accepted > votes.len() { Vote::Accepted } else { Vote::Rejected };
    let (successful, unsuccessful): (Vec<_>, Vec<_>) = votes.iter().partition(|(_, v)| *v == decision);
    Ok(Tally {
        decision,
        successful: successful.into_iter().map(|(id, _)| id).collect(),
        unsuccessful: unsuccessful.into_iter().map(|(id, _)| id).collect(),
    })
}

pub fn pick_winner<R: Rng + ?Sized>(successful: &[ValidatorId], rng: &mut R) -> Result<ValidatorId, ConsensusError> {
    if successful.is_empty() {
        return Err(ConsensusError::NoSuccessful);
    }
    Ok(successful[rng.gen_range(0..successful.len())])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationChange {
    pub id: ValidatorId,
    pub before: f64,
    pub after: f64,
}

/// Everything that happened in one round; doubles as the audit record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u64,
    pub panel: Panel,
    pub votes: Vec<(ValidatorId, Vote)>,
    pub decision: Vote,
    pub successful: Vec<ValidatorId>,
    pub unsuccessful: Vec<ValidatorId>,
    pub winner: ValidatorId,
    pub winner_label: usize,
    pub block_valid: bool,
    pub rejection: Option<String>,
    pub appended: bool,
    pub reputation_changes: Vec<ReputationChange>,
    pub expelled: Vec<ValidatorId>,
}

/// Settings shared by every round of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEngine {
    pub var: LinguisticVariable,
    pub params: ReputationParams,
    pub byzantine: ByzantineModel,
    pub commission: f64,
}

impl ConsensusEngine {
    pub fn new(var: LinguisticVariable, params: ReputationParams, byzantine: ByzantineModel, commission: f64) -> Self {
        Self { var, params, byzantine, commission }
    }

    pub fn trusted_sets_required(&self) -> usize {
        (self.var.len() - 2) / 2 + 1
    }

    /// Runs scaling, selection, voting, and settlement for round `round`
    /// (counted from 1). The block is appended only when the panel accepts it
    /// and it validates against the chain.
    pub fn run_round<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        registry: &mut Registry,
        chain: &mut Chain,
        block: Block,
        round: u64,
        selection_rng: &mut R1,
        vote_rng: &mut R2,
    ) -> Result<RoundOutcome, ConsensusError> {
        registry.rescale(&self.var);
        let groups = candidate_groups(registry, self.var.len());
        let panel = select_panel(&groups, round, selection_rng)?;

        let validity: Result<(), BlockRejection> = chain.validate_block(&block);
        let block_valid = validity.is_ok();
        let votes = cast_votes(&panel, block_valid, &self.byzantine, vote_rng);
        let Tally { decision, successful, unsuccessful } = tally(&votes)?;
        let winner = pick_winner(&successful, selection_rng)?;

        let mut reputation_changes = Vec::with_capacity(panel.len());
        let mut expelled = Vec::new();
        for (ids, outcome) in [(&successful, Outcome::Successful), (&unsuccessful, Outcome::Unsuccessful)] {
            for &id in ids {
                let v = registry.get_mut(id)?;
                let before = v.reputation;
                v.reputation = update_reputation(before, outcome, &self.params);
                reputation_changes.push(ReputationChange { id, before, after: v.reputation });
                if apply_exclusion(v, &self.params) {
                    expelled.push(id);
                }
            }
        }
        let winner_label = panel.label_of(winner).expect("winner sits on the panel");
        apply_commission(registry.get_mut(winner)?, self.commission, &self.var);

        let appended = decision == Vote::Accepted && block_valid;
        if appended {
            chain.push_validated(block);
        }
        reputation_changes.sort_by_key(|c| c.id);
        expelled.sort();

        Ok(RoundOutcome {
            round,
            panel,
            votes,
            decision,
            successful,
            unsuccessful,
            winner,
            winner_label,
            block_valid,
            rejection: validity.err().map(|e| e.to_string()),
            appended,
            reputation_changes,
            expelled,
        })
    }
}

/// Ids on a panel, for membership checks.
pub fn panel_ids(panel: &Panel) -> BTreeSet<ValidatorId> {
    panel.members.iter().map(|m| m.id).collect()
}
