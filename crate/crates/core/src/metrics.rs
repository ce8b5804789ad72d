//! Subgroup fairness values, subgroup disparity and balanced accuracy.
//!
//! Every subgroup value `p(X, s)` is compared against the value over the
//! whole dataset `p(X)`, not against a designated privileged group:
//!
//! * `gamma_diff  = max_s |p(X) - p(X, s)|`
//! * `gamma_ratio = max_s 1 - min(p(X, s) / p(X), p(X) / p(X, s))`
//!
//! The threshold search evaluates millions of candidate maps through the
//! same [`Confusion::value`] and [`gamma_difference`] / [`gamma_ratio`]
//! functions used here, so a gamma reported by the search is bit-identical
//! to the gamma recomputed from its predictions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ClassLabel, SubgroupKey};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    DemographicParity,
    EqualizedOdds,
    EqualOpportunity,
}

impl Criterion {
    pub const ALL: [Criterion; 3] =
        [Criterion::DemographicParity, Criterion::EqualizedOdds, Criterion::EqualOpportunity];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::DemographicParity => "demographic_parity",
            Criterion::EqualizedOdds => "equalized_odds",
            Criterion::EqualOpportunity => "equal_opportunity",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "demographic_parity" | "dp" => Ok(Criterion::DemographicParity),
            "equalized_odds" | "eodds" => Ok(Criterion::EqualizedOdds),
            "equal_opportunity" | "eopp" => Ok(Criterion::EqualOpportunity),
            _ => Err(Error::Config(format!("unknown criterion {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparityForm {
    Difference,
    Ratio,
}

impl DisparityForm {
    pub fn as_str(self) -> &'static str {
        match self {
            DisparityForm::Difference => "difference",
            DisparityForm::Ratio => "ratio",
        }
    }
}

impl fmt::Display for DisparityForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisparityForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "difference" | "diff" | "d" => Ok(DisparityForm::Difference),
            "ratio" | "r" => Ok(DisparityForm::Ratio),
            _ => Err(Error::Config(format!("unknown disparity form {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub criterion: Criterion,
    pub form: DisparityForm,
}

impl MetricSpec {
    pub fn new(criterion: Criterion, form: DisparityForm) -> Self {
        MetricSpec { criterion, form }
    }
}

/// Confusion counts over some subset of instances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_counts(positives: u64, negatives: u64, tp: u64, fp: u64) -> Self {
        Confusion { tp, fp, tn: negatives - fp, fn_: positives - tp }
    }

    pub fn record(&mut self, predicted: ClassLabel, truth: ClassLabel) {
        match (predicted.is_favorable(), truth.is_favorable()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    /// Whether `criterion` has a defined value on these counts.
    #[inline]
    pub fn defines(&self, criterion: Criterion) -> bool {
        match criterion {
            Criterion::DemographicParity => self.total() > 0,
            Criterion::EqualOpportunity => self.positives() > 0,
            Criterion::EqualizedOdds => self.positives() > 0 && self.negatives() > 0,
        }
    }

    /// Criterion value, or `None` when the required truth classes are absent.
    #[inline]
    pub fn value(&self, criterion: Criterion) -> Option<f64> {
        if !self.defines(criterion) {
            return None;
        }
        Some(match criterion {
            Criterion::DemographicParity => (self.tp + self.fp) as f64 / self.total() as f64,
            Criterion::EqualOpportunity => self.tp as f64 / self.positives() as f64,
            Criterion::EqualizedOdds => {
                let tpr = self.tp as f64 / self.positives() as f64;
                let fpr = self.fp as f64 / self.negatives() as f64;
                (tpr + fpr) / 2.0
            }
        })
    }

    /// `(TPR + TNR) / 2`, `None` unless both truth classes are present.
    #[inline]
    pub fn balanced_accuracy(&self) -> Option<f64> {
        if self.positives() == 0 || self.negatives() == 0 {
            return None;
        }
        let tpr = self.tp as f64 / self.positives() as f64;
        let tnr = self.tn as f64 / self.negatives() as f64;
        Some((tpr + tnr) / 2.0)
    }
}

/// One subgroup's contribution to the ratio form.
///
/// `0/0` counts as no disparity; exactly one zero counts as total disparity.
#[inline]
pub fn ratio_term(overall: f64, value: f64) -> f64 {
    match (overall == 0.0, value == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => 1.0 - (value / overall).min(overall / value),
    }
}

#[inline]
pub fn gamma_difference<I: IntoIterator<Item = f64>>(overall: f64, values: I) -> f64 {
    values.into_iter().map(|v| (overall - v).abs()).fold(0.0, f64::max)
}

#[inline]
pub fn gamma_ratio<I: IntoIterator<Item = f64>>(overall: f64, values: I) -> f64 {
    values.into_iter().map(|v| ratio_term(overall, v)).fold(0.0, f64::max)
}

#[inline]
pub fn gamma<I: IntoIterator<Item = f64>>(form: DisparityForm, overall: f64, values: I) -> f64 {
    match form {
        DisparityForm::Difference => gamma_difference(overall, values),
        DisparityForm::Ratio => gamma_ratio(overall, values),
    }
}

fn check_lengths(preds: &[ClassLabel], truths: &[ClassLabel]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::InvalidInput(format!("{} predictions for {} truths", preds.len(), truths.len())));
    }
    Ok(())
}

/// Criterion value over the instances selected by `mask`.
pub fn metric_value(preds: &[ClassLabel], truths: &[ClassLabel], mask: &[bool], criterion: Criterion) -> Result<f64> {
    check_lengths(preds, truths)?;
    if mask.len() != preds.len() {
        return Err(Error::InvalidInput("mask length differs from predictions".into()));
    }
    let mut conf = Confusion::default();
    for ((&p, &t), _) in preds.iter().zip(truths).zip(mask).filter(|(_, &m)| m) {
        conf.record(p, t);
    }
    if conf.total() == 0 {
        return Err(Error::EmptySubset("metric mask selects no instances".into()));
    }
    conf.value(criterion).ok_or_else(|| {
        Error::UndefinedMetric(format!(
            "{criterion} needs {} in the selected instances",
            match criterion {
                Criterion::EqualOpportunity => "favorable truths",
                _ => "both truth classes",
            }
        ))
    })
}

pub fn balanced_accuracy(preds: &[ClassLabel], truths: &[ClassLabel]) -> Result<f64> {
    check_lengths(preds, truths)?;
    let mut conf = Confusion::default();
    for (&p, &t) in preds.iter().zip(truths) {
        conf.record(p, t);
    }
    conf.balanced_accuracy().ok_or_else(|| Error::SingleClass("balanced accuracy needs both truth classes".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub criterion: Criterion,
    #[serde(with = "crate::data::key_map")]
    pub per_subgroup: BTreeMap<SubgroupKey, f64>,
    /// Subgroups whose value is undefined and were left out of the maxima.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SubgroupKey>,
    pub overall: f64,
    pub gamma_diff: f64,
    pub gamma_ratio: f64,
    /// `None` when the truths contain a single class.
    pub balanced_accuracy: Option<f64>,
}

impl DisparityReport {
    pub fn gamma(&self, form: DisparityForm) -> f64 {
        match form {
            DisparityForm::Difference => self.gamma_diff,
            DisparityForm::Ratio => self.gamma_ratio,
        }
    }
}

/// Per-subgroup values and both disparity forms for one criterion.
pub fn disparity(
    preds: &[ClassLabel],
    truths: &[ClassLabel],
    groups: &[SubgroupKey],
    criterion: Criterion,
) -> Result<DisparityReport> {
    check_lengths(preds, truths)?;
    if groups.len() != preds.len() {
        return Err(Error::InvalidInput("group labels length differs from predictions".into()));
    }
    if preds.is_empty() {
        return Err(Error::EmptySubset("no predictions".into()));
    }
    let mut overall = Confusion::default();
    let mut by_group: BTreeMap<&SubgroupKey, Confusion> = BTreeMap::new();
    for ((&p, &t), g) in preds.iter().zip(truths).zip(groups) {
        overall.record(p, t);
        by_group.entry(g).or_default().record(p, t);
    }
    let overall_value = overall
        .value(criterion)
        .ok_or_else(|| Error::UndefinedMetric(format!("{criterion} undefined on the whole dataset")))?;
    let mut per_subgroup = BTreeMap::new();
    let mut skipped = Vec::new();
    for (g, conf) in by_group {
        match conf.value(criterion) {
            Some(v) => {
                per_subgroup.insert(g.clone(), v);
            }
            None => {
                log::warn!("{criterion} undefined for subgroup {g}; excluded from disparity");
                skipped.push(g.clone());
            }
        }
    }
    Ok(DisparityReport {
        criterion,
        gamma_diff: gamma_difference(overall_value, per_subgroup.values().copied()),
        gamma_ratio: gamma_ratio(overall_value, per_subgroup.values().copied()),
        per_subgroup,
        skipped,
        overall: overall_value,
        balanced_accuracy: overall.balanced_accuracy(),
    })
}
