//! Fairness-aware binary classification across intersecting sensitive
//! attributes.
//!
//! Every pair of subgroups gets its own mitigator; an instance collects the
//! verdicts of all pairs containing its subgroup, and per-subgroup
//! thresholds on the combined score are tuned for accuracy under a
//! disparity budget.

// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod data;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mitigators;
pub mod ovo;

pub use classifier::{LogisticModel, TrainConfig};
pub use data::{
    enumerate_pairs, enumerate_subgroups, pair_subset, pairs_for_subgroup, ClassLabel, Dataset, Instance,
    SensitiveAttribute, SubgroupKey, SubgroupPair,
};
pub use error::{Error, Result};
pub use harness::{run_experiment, sweep_epsilon, ExperimentConfig, RunResult};
pub use metrics::{Criterion, DisparityForm, DisparityReport, MetricSpec};
pub use mitigators::{Evaluation, MitigatorKind, PairContext};
pub use ovo::{
    apply_thresholds, score_instance, search_thresholds, OvoConfig, ScoredInstance, SearchConfig, SearchOutcome,
    ThresholdMap,
};
