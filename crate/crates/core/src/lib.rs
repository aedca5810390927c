//! Fuzzy stake scaling, reputation-driven validator selection and majority
//! voting over a small signed ledger, with PoW/PoS/DPoS baselines and the
//! inequality metrics used to compare them.
//!
//! Module map:
//!
//! - [`fuzzy`]: linguistic variables and highest-membership classification
//! - [`registry`]: validators, reputation updates, expulsion
//! - [`consensus`]: panel selection, voting, settlement
//! - [`ledger`]: signed transactions and hash-chained blocks
//! - [`baselines`]: PoW, PoS and DPoS winner simulators
//! - [`metrics`]: Gini coefficient, skewness, kurtosis
//! - [`harness`]: experiment configuration, drivers and output files

pub mod baselines;
pub mod consensus;
pub mod fuzzy;
pub mod harness;
pub mod ledger;
pub mod metrics;
pub mod registry;

pub use consensus::{ByzantineModel, ConsensusEngine, Panel, RoundOutcome, Vote};
pub use fuzzy::{LabelAssignment, LinguisticVariable, MembershipFunction, Shape};
pub use metrics::{FrequencyTable, Granularity, MetricsReport};
pub use registry::{Registry, ReputationParams, Validator, ValidatorId};
