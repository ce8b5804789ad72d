//! Per-pair bias mitigation functions.
//!
//! Every mitigator is fitted on the instances of one subgroup pair and then
//! maps an instance of that pair to a class and a probability. Massaging
//! has no probability and always reports 0.

mod eo;
mod fair_lr;
mod massaging;
mod roc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use eo::{eo_eval, eo_fit, eo_fit_with, EoCriterion, EoState, MixingRates, EO_GRID_STEPS, EO_TOLERANCE};
pub use fair_lr::{fair_lr_eval, fair_lr_fit};
pub use massaging::{massaging_eval, massaging_fit, MassagingState};
pub use roc::{default_width_grid, roc_eval, roc_fit};

use crate::classifier::{LogisticModel, TrainConfig};
use crate::data::{enumerate_subgroups, ClassLabel, Dataset, Instance, SubgroupKey, SubgroupPair};
use crate::error::{Error, Result};
use crate::metrics::Criterion;

const CONTEXT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MitigatorKind {
    #[serde(rename = "MS")]
    Massaging,
    #[serde(rename = "FAIR_LR")]
    FairLr,
    #[serde(rename = "ROC")]
    RejectOption,
    #[serde(rename = "EO_ODDS")]
    EqualizedOdds,
    #[serde(rename = "EO_OPP")]
    EqualOpportunity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Pre,
    In,
    Post,
}

impl MitigatorKind {
    pub const ALL: [MitigatorKind; 5] = [
        MitigatorKind::Massaging,
        MitigatorKind::FairLr,
        MitigatorKind::RejectOption,
        MitigatorKind::EqualizedOdds,
        MitigatorKind::EqualOpportunity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MitigatorKind::Massaging => "MS",
            MitigatorKind::FairLr => "FAIR_LR",
            MitigatorKind::RejectOption => "ROC",
            MitigatorKind::EqualizedOdds => "EO_ODDS",
            MitigatorKind::EqualOpportunity => "EO_OPP",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            MitigatorKind::Massaging => Stage::Pre,
            MitigatorKind::FairLr => Stage::In,
            _ => Stage::Post,
        }
    }

    /// Method / criterion compatibility; the fairness-regularised model takes
    /// the row of the adversarial in-processing method it stands in for.
    pub fn supports(self, criterion: Criterion) -> bool {
        match self {
            MitigatorKind::Massaging | MitigatorKind::RejectOption => criterion == Criterion::DemographicParity,
            MitigatorKind::FairLr => true,
            MitigatorKind::EqualizedOdds => criterion == Criterion::EqualizedOdds,
            MitigatorKind::EqualOpportunity => criterion == Criterion::EqualOpportunity,
        }
    }
}

impl fmt::Display for MitigatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MitigatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        MitigatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// `(Ĉ, R)` for one instance and one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub class: ClassLabel,
    pub proba: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PairState {
    #[serde(rename = "MS")]
    Massaging(MassagingState),
    #[serde(rename = "FAIR_LR")]
    FairLr { model: LogisticModel },
    #[serde(rename = "ROC")]
    RejectOption { width: f64 },
    #[serde(rename = "EO")]
    EqualizedOdds(EoState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairContext {
    pub pair: SubgroupPair,
    /// Pair member with the lower favorable rate in the pair's training data.
    pub deprived: SubgroupKey,
    pub state: PairState,
}

#[derive(Serialize, Deserialize)]
struct ContextDocument {
    schema_version: u32,
    context: PairContext,
}

impl PairContext {
    pub fn kind(&self) -> MitigatorKind {
        match &self.state {
            PairState::Massaging(_) => MitigatorKind::Massaging,
            PairState::FairLr { .. } => MitigatorKind::FairLr,
            PairState::RejectOption { .. } => MitigatorKind::RejectOption,
            PairState::EqualizedOdds(s) => match s.criterion {
                EoCriterion::Odds => MitigatorKind::EqualizedOdds,
                EoCriterion::Opportunity => MitigatorKind::EqualOpportunity,
            },
        }
    }

    pub fn favored(&self) -> &SubgroupKey {
        if self.pair.first() == &self.deprived {
            self.pair.second()
        } else {
            self.pair.first()
        }
    }

    pub(crate) fn check_member(&self, instance: &Instance) -> Result<()> {
        if !self.pair.contains(&instance.sensitive) {
            return Err(Error::UnknownSubgroup(format!("{} is not in pair {}", instance.sensitive, self.pair)));
        }
        Ok(())
    }

    /// Uniform entry point; post-processors need the shared plain model.
    pub fn evaluate(&self, instance: &Instance, plain: Option<&LogisticModel>, seed: u64) -> Result<Evaluation> {
        let need_plain =
            || plain.ok_or_else(|| Error::InvalidInput(format!("{} evaluation needs the plain model", self.kind())));
        match &self.state {
            PairState::Massaging(_) => massaging_eval(instance, self),
            PairState::FairLr { .. } => fair_lr_eval(instance, self),
            PairState::RejectOption { .. } => roc_eval(instance, self, need_plain()?),
            PairState::EqualizedOdds(_) => eo_eval(instance, self, need_plain()?, seed),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ContextDocument { schema_version: CONTEXT_SCHEMA_VERSION, context: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ContextDocument = serde_json::from_str(text)?;
        if doc.schema_version != CONTEXT_SCHEMA_VERSION {
            return Err(Error::Config(format!("pair context schema version {} unsupported", doc.schema_version)));
        }
        Ok(doc.context)
    }
}

/// The single pair formed by the two subgroups of `pair_train`.
pub(crate) fn two_subgroups(pair_train: &Dataset) -> Result<SubgroupPair> {
    let groups = enumerate_subgroups(pair_train);
    if groups.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "pair mitigation needs exactly two subgroups, found {}",
            groups.len()
        )));
    }
    SubgroupPair::new(groups[0].clone(), groups[1].clone())
}

/// Lower favorable rate wins; ties go to the lexicographically first key.
pub fn deprived_subgroup(pair_train: &Dataset, pair: &SubgroupPair) -> SubgroupKey {
    let rate = |key: &SubgroupKey| {
        let (mut n, mut pos) = (0usize, 0usize);
        for inst in pair_train.instances().iter().filter(|i| &i.sensitive == key) {
            n += 1;
            pos += usize::from(inst.true_class.is_favorable());
        }
        // compare pos_a / n_a against pos_b / n_b without rounding
        (pos, n)
    };
    let (pa, na) = rate(pair.first());
    let (pb, nb) = rate(pair.second());
    if pb * na < pa * nb {
        pair.second().clone()
    } else {
        pair.first().clone()
    }
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn pair_hash(pair: &SubgroupPair) -> u64 {
    // FNV-1a over the pair's values; stable across platforms and runs
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for key in pair.members() {
        for v in key.values() {
            for b in v.bytes().chain(std::iter::once(0x1f)) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h ^= 0x1e;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Counter-based uniform draw in [0, 1) keyed on (seed, pair, instance).
pub fn keyed_uniform(seed: u64, pair: &SubgroupPair, instance_id: usize) -> f64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ pair_hash(pair));
    h = splitmix64(h ^ instance_id as u64);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigatorSettings {
    /// Used for the Massaging ranker and the fairness-regularised model.
    pub train: TrainConfig,
    pub roc_widths: Vec<f64>,
    pub fairness_weight: f64,
    pub eo_grid_steps: usize,
    pub eo_tolerance: f64,
}

impl Default for MitigatorSettings {
    fn default() -> Self {
        MitigatorSettings {
            train: TrainConfig::default(),
            roc_widths: default_width_grid(),
            fairness_weight: 10.0,
            eo_grid_steps: EO_GRID_STEPS,
            eo_tolerance: EO_TOLERANCE,
        }
    }
}

/// Fits `kind` on one pair's training data. Massaging also returns the relabeled data.
pub fn fit_pair(
    kind: MitigatorKind,
    pair_train: &Dataset,
    plain: Option<&LogisticModel>,
    settings: &MitigatorSettings,
) -> Result<(PairContext, Option<Dataset>)> {
    let need_plain = || plain.ok_or_else(|| Error::InvalidInput(format!("{kind} fitting needs the plain model")));
    Ok(match kind {
        MitigatorKind::Massaging => {
            let (relabeled, ctx) = massaging_fit(pair_train, &settings.train)?;
            (ctx, Some(relabeled))
        }
        MitigatorKind::FairLr => (fair_lr_fit(pair_train, &settings.train, settings.fairness_weight)?, None),
        MitigatorKind::RejectOption => (roc_fit(need_plain()?, pair_train, &settings.roc_widths)?, None),
        MitigatorKind::EqualizedOdds | MitigatorKind::EqualOpportunity => {
            let criterion =
                if kind == MitigatorKind::EqualizedOdds { EoCriterion::Odds } else { EoCriterion::Opportunity };
            (eo_fit_with(need_plain()?, pair_train, criterion, settings.eo_grid_steps, settings.eo_tolerance)?, None)
        }
    })
}
