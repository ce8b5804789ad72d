use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, SubgroupKey};
use crate::error::{Error, Result};

/// Vote ratio, mean probability and combined score of one instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub vote_ratio: f64,
    pub mean_proba: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub subgroup: SubgroupKey,
    pub vote_ratio: f64,
    pub mean_proba: f64,
    pub score: f64,
    pub true_class: ClassLabel,
}

impl ScoredInstance {
    pub fn new(subgroup: SubgroupKey, score: Score, true_class: ClassLabel) -> Self {
        ScoredInstance {
            subgroup,
            vote_ratio: score.vote_ratio,
            mean_proba: score.mean_proba,
            score: score.score,
            true_class,
        }
    }
}

/// Weight of the vote ratio for `num_subgroups` subgroups.
///
/// Chosen so one vote, worth `w / (|S| - 1)`, equals the whole probability
/// term `1 - w`.
pub fn vote_weight(num_subgroups: usize) -> f64 {
    (num_subgroups - 1) as f64 / num_subgroups as f64
}

/// Combines the `|S| - 1` pair verdicts for one instance.
pub fn score_instance(votes: &[ClassLabel], probas: &[f64], num_subgroups: usize) -> Result<Score> {
    if num_subgroups < 2 {
        return Err(Error::TooFewSubgroups { found: num_subgroups });
    }
    let k = num_subgroups - 1;
    if votes.len() != k || probas.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: if votes.len() != k { votes.len() } else { probas.len() },
        });
    }
    if let Some(p) = probas.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
    }
    let plus = votes.iter().filter(|v| v.is_favorable()).count();
    let vote_ratio = plus as f64 / k as f64;
    let mean_proba = probas.iter().sum::<f64>() / k as f64;
    let w = vote_weight(num_subgroups);
    let score = (w * vote_ratio + (1.0 - w) * mean_proba).clamp(0.0, 1.0);
    Ok(Score { vote_ratio, mean_proba, score })
}

/// Per-subgroup thresholds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThresholdMap(#[serde(with = "crate::data::key_map")] pub BTreeMap<SubgroupKey, f64>);

impl ThresholdMap {
    pub fn uniform<'a>(keys: impl IntoIterator<Item = &'a SubgroupKey>, theta: f64) -> Self {
        ThresholdMap(keys.into_iter().map(|k| (k.clone(), theta)).collect())
    }

    pub fn get(&self, key: &SubgroupKey) -> Option<f64> {
        self.0.get(key).copied()
    }
}

/// `+` exactly when the score is strictly above the subgroup's threshold.
pub fn apply_thresholds(scored: &[ScoredInstance], theta: &ThresholdMap) -> Result<Vec<ClassLabel>> {
    scored
        .iter()
        .map(|s| {
            let t = theta
                .get(&s.subgroup)
                .ok_or_else(|| Error::UnknownSubgroup(format!("no threshold for subgroup {}", s.subgroup)))?;
            Ok(ClassLabel::from_favorable(s.score > t))
        })
        .collect()
}
