//! Validator population and the reputation lifecycle.

use std::fmt;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{LinguisticVariable, DEGREE_TOLERANCE};
use crate::ledger::KeyPair;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("unknown validator {0}")]
    Unknown(ValidatorId),
    #[error("invalid reputation parameters: {0}")]
    Params(String),
    #[error("stake must be finite and non-negative, got {0}")]
    Stake(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidatorId(pub u64);

impl fmt::Display for ValidatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Expelled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Successful,
    Unsuccessful,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validator {
    pub id: ValidatorId,
    #[serde(with = "hex::serde")]
    pub verify_key: Vec<u8>,
    pub stake: f64,
    pub reputation: f64,
    pub label_index: usize,
    pub status: Status,
}

impl Validator {
    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }

    /// Member of the full-reputation subset.
    pub fn has_full_reputation(&self) -> bool {
        is_full(self.reputation)
    }
}

fn is_full(rep: f64) -> bool {
    rep >= 1.0 - DEGREE_TOLERANCE
}

/// Decrease rate `eta`, increase rate `eta / l_divisor`, expulsion threshold `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReputationParams {
    pub eta: f64,
    pub l_divisor: u32,
    pub epsilon: f64,
}

impl Default for ReputationParams {
    fn default() -> Self {
        Self { eta: 0.1, l_divisor: 20, epsilon: 0.25 }
    }
}

impl ReputationParams {
    pub fn validate(&self) -> Result<(), RegistryError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(RegistryError::Params(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.l_divisor < 1 {
            return Err(RegistryError::Params("l_divisor must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(RegistryError::Params(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        Ok(())
    }

    pub fn increase(&self) -> f64 {
        self.eta / f64::from(self.l_divisor)
    }
}

/// Next-round reputation, clamped to `[0, 1]`.
pub fn update_reputation(rep: f64, outcome: Outcome, params: &ReputationParams) -> f64 {
    let next = match outcome {
        Outcome::Successful if is_full(rep) => 1.0,
        Outcome::Successful => rep + params.increase(),
        Outcome::Unsuccessful => rep - params.eta,
    };
    // snap accumulated rounding back onto the full-reputation fixed point
    if is_full(next) {
        1.0
    } else {
        next.clamp(0.0, 1.0)
    }
}

pub fn expulsion_rate(rep: f64) -> f64 {
    if is_full(rep) {
        0.0
    } else {
        1.0 - rep
    }
}

/// Expels `v` when its expulsion rate exceeds `epsilon`. Returns whether the
/// validator was expelled by this call.
pub fn apply_exclusion(v: &mut Validator, params: &ReputationParams) -> bool {
    if v.is_active() && expulsion_rate(v.reputation) > params.epsilon {
        v.status = Status::Expelled;
        return true;
    }
    false
}

/// Adds `amount` to the stake and reclassifies on the clamped stake.
pub fn apply_commission(v: &mut Validator, amount: f64, var: &LinguisticVariable) {
    v.stake += amount.max(0.0);
    v.label_index = var.classify(v.stake).label_index;
}

/// Owner of all validator state. Ids are dense indices into the population.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    validators: Vec<Validator>,
    keys: Vec<KeyPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrySnapshot {
    pub validators: Vec<Validator>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Admits a validator with full reputation and a fresh keypair.
    pub fn admit<R: RngCore + CryptoRng>(
        &mut self,
        stake: f64,
        var: &LinguisticVariable,
        rng: &mut R,
    ) -> Result<ValidatorId, RegistryError> {
        if !stake.is_finite() || stake < 0.0 {
            return Err(RegistryError::Stake(stake));
        }
        let id = ValidatorId(self.validators.len() as u64);
        let keys = KeyPair::generate(rng);
        self.validators.push(Validator {
            id,
            verify_key: keys.verify_key(),
            stake,
            reputation: 1.0,
            label_index: var.classify(stake).label_index,
            status: Status::Active,
        });
        self.keys.push(keys);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.validators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.validators.is_empty()
    }

    pub fn get(&self, id: ValidatorId) -> Result<&Validator, RegistryError> {
        self.validators.get(id.0 as usize).ok_or(RegistryError::Unknown(id))
    }

    pub fn get_mut(&mut self, id: ValidatorId) -> Result<&mut Validator, RegistryError> {
        self.validators.get_mut(id.0 as usize).ok_or(RegistryError::Unknown(id))
    }

    pub fn keys(&self, id: ValidatorId) -> Result<&KeyPair, RegistryError> {
        self.keys.get(id.0 as usize).ok_or(RegistryError::Unknown(id))
    }

    pub fn validators(&self) -> &[Validator] {
        &self.validators
    }

    pub fn active(&self) -> impl Iterator<Item = &Validator> {
        self.validators.iter().filter(|v| v.is_active())
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    /// Scaling phase over the whole population.
    pub fn rescale(&mut self, var: &LinguisticVariable) {
        for v in self.validators.iter_mut().filter(|v| v.is_active()) {
            v.label_index = var.classify(v.stake).label_index;
        }
    }

    /// Active validators grouped by label, in id order within each group.
    pub fn groups(&self, label_count: usize) -> Vec<Vec<&Validator>> {
        let mut groups = vec![Vec::new(); label_count];
        for v in self.active() {
            groups[v.label_index.min(label_count - 1)].push(v);
        }
        groups
    }

    pub fn census(&self, label_count: usize) -> Vec<usize> {
        self.groups(label_count).iter().map(Vec::len).collect()
    }

    pub fn snapshot(&self) -> RegistrySnapshot {
        RegistrySnapshot { validators: self.validators.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn var() -> LinguisticVariable {
        LinguisticVariable::uniform("stake", ["VL", "L", "M", "H", "VH"], 0.0, 10.0).unwrap()
    }

    fn validator(stake: f64, reputation: f64) -> Validator {
        Validator {
            id: ValidatorId(0),
            verify_key: vec![],
            stake,
            reputation,
            label_index: var().classify(stake).label_index,
            status: Status::Active,
        }
    }

    #[test]
    fn admission() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut reg = Registry::new();
        let a = reg.admit(6.0, &var(), &mut rng).unwrap();
        let b = reg.admit(0.0, &var(), &mut rng).unwrap();
        assert_ne!(a, b);
        let va = reg.get(a).unwrap();
        assert_eq!((va.reputation, va.label_index, va.status), (1.0, 2, Status::Active));
        assert_eq!(reg.get(b).unwrap().label_index, 0);
        assert_ne!(reg.get(a).unwrap().verify_key, reg.get(b).unwrap().verify_key);
        assert!(reg.admit(-1.0, &var(), &mut rng).is_err());
    }

    #[test]
    fn reputation_rule() {
        let p = ReputationParams::default();
        assert_eq!(update_reputation(1.0, Outcome::Successful, &p), 1.0);
        assert_abs_diff_eq!(update_reputation(0.9, Outcome::Successful, &p), 0.905, epsilon = 1e-12);
        assert_abs_diff_eq!(update_reputation(0.95, Outcome::Unsuccessful, &p), 0.85, epsilon = 1e-12);
        assert_eq!(update_reputation(0.05, Outcome::Unsuccessful, &p), 0.0);
        assert_eq!(update_reputation(0.998, Outcome::Successful, &p), 1.0);
    }

    #[test]
    fn one_failure_costs_l_successes() {
        let p = ReputationParams::default();
        let mut rep = update_reputation(0.9, Outcome::Unsuccessful, &p);
        assert_abs_diff_eq!(rep, 0.8, epsilon = 1e-12);
        for _ in 0..p.l_divisor {
            rep = update_reputation(rep, Outcome::Successful, &p);
        }
        assert_abs_diff_eq!(rep, 0.9, epsilon = 1e-9);
    }

    #[test]
    fn expulsion() {
        assert_eq!(expulsion_rate(1.0), 0.0);
        assert_abs_diff_eq!(expulsion_rate(0.7), 0.3, epsilon = 1e-12);
        assert_eq!(expulsion_rate(0.0), 1.0);

        let p = ReputationParams::default();
        let mut low = validator(5.0, 0.7);
        assert!(apply_exclusion(&mut low, &p));
        assert_eq!(low.status, Status::Expelled);
        assert!(!apply_exclusion(&mut low, &p));
        assert_eq!(low.status, Status::Expelled);

        let mut ok = validator(5.0, 0.8);
        assert!(!apply_exclusion(&mut ok, &p));
        let mut full = validator(5.0, 1.0);
        assert!(!apply_exclusion(&mut full, &ReputationParams { epsilon: 0.0, ..p }));
    }

    #[test]
    fn commission_moves_labels() {
        let v_ = var();
        let mut v = validator(7.4, 1.0);
        let before = v.label_index;
        apply_commission(&mut v, 0.0, &v_);
        assert_eq!((v.stake, v.label_index), (7.4, before));

        let mut v = validator(6.0, 1.0);
        assert_eq!(v.label_index, 2);
        apply_commission(&mut v, 0.5, &v_);
        assert_abs_diff_eq!(v.stake, 6.5, epsilon = 1e-12);
        assert_eq!(v.label_index, 3);

        let mut v = validator(9.9, 1.0);
        apply_commission(&mut v, 5.0, &v_);
        assert_abs_diff_eq!(v.stake, 14.9, epsilon = 1e-12);
        assert_eq!(v.label_index, 4);
    }

    #[test]
    fn params_validation() {
        assert!(ReputationParams::default().validate().is_ok());
        assert!(ReputationParams { eta: 0.0, ..Default::default() }.validate().is_err());
        assert!(ReputationParams { l_divisor: 0, ..Default::default() }.validate().is_err());
        assert!(ReputationParams { epsilon: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn snapshot_serializes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut reg = Registry::new();
        reg.admit(3.0, &var(), &mut rng).unwrap();
        let json = serde_json::to_string(&reg.snapshot()).unwrap();
        assert!(json.contains("\"status\":\"active\""));
        let back: RegistrySnapshot = serde_json::from_str(&json).unwrap();
        assert_eq!(back, reg.snapshot());
    }
}
