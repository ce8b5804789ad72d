//! Pre-, in- and post-processing orchestrations.
//!
//! Fitting (pair mitigators, plain model, training scores) is separated from
//! the threshold search so an epsilon sweep can reuse one fit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::{apply_thresholds, score_instance, ScoredInstance};
use super::search::{search_thresholds_multi, SearchConfig, SearchOutcome};
use crate::classifier::{fit, LogisticModel, TrainConfig};
use crate::data::{enumerate_pairs, enumerate_subgroups, pair_subset, ClassLabel, Dataset, Instance, SubgroupKey};
use crate::error::{Error, Result};
use crate::metrics::{Criterion, MetricSpec};
use crate::mitigators::{fit_pair, MitigatorKind, MitigatorSettings, PairContext, Stage};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OvoConfig {
    /// Plain classifier, also the final model of the pre-processing approach.
    pub plain: TrainConfig,
    pub mitigators: MitigatorSettings,
    pub search: SearchConfig,
    /// Key of the randomized post-processing draws.
    pub seed: u64,
}

/// Everything learned from the training set before thresholds are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedOvo {
    pub method: MitigatorKind,
    pub subgroups: Vec<SubgroupKey>,
    pub contexts: Vec<PairContext>,
    pub plain: Option<LogisticModel>,
    pub train_scores: Vec<ScoredInstance>,
    pub seed: u64,
}

/// Fits the per-pair mitigators on `train` and scores every training instance.
pub fn fit_ovo(train: &Dataset, method: MitigatorKind, config: &OvoConfig) -> Result<FittedOvo> {
    let subgroups = enumerate_subgroups(train);
    let pairs = enumerate_pairs(&subgroups)?;
    let plain = match method.stage() {
        Stage::Post => Some(fit(train, &config.plain)?),
        _ => None,
    };
    let contexts = pairs
        .par_iter()
        .map(|pair| {
            let subset = pair_subset(train, pair)?;
            if !subset.has_both_classes() {
                return Err(Error::SingleClass(format!("pair {pair} has a single class")));
            }
            fit_pair(method, &subset, plain.as_ref(), &config.mitigators).map(|(ctx, _)| ctx)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fitted = FittedOvo { method, subgroups, contexts, plain, train_scores: Vec::new(), seed: config.seed };
    fitted.train_scores = fitted.score(train)?;
    Ok(fitted)
}

impl FittedOvo {
    pub fn num_subgroups(&self) -> usize {
        self.subgroups.len()
    }

    /// Pair contexts consulted for each subgroup.
    fn routing(&self) -> BTreeMap<&SubgroupKey, Vec<&PairContext>> {
        let mut map: BTreeMap<&SubgroupKey, Vec<&PairContext>> = BTreeMap::new();
        for ctx in &self.contexts {
            for key in ctx.pair.members() {
                map.entry(key).or_default().push(ctx);
            }
        }
        map
    }

    fn score_one(&self, inst: &Instance, route: &[&PairContext]) -> Result<ScoredInstance> {
        let mut votes = Vec::with_capacity(route.len());
        let mut probas = Vec::with_capacity(route.len());
        for ctx in route {
            let e = ctx.evaluate(inst, self.plain.as_ref(), self.seed)?;
            votes.push(e.class);
            probas.push(e.proba);
        }
        let score = score_instance(&votes, &probas, self.num_subgroups())?;
        Ok(ScoredInstance::new(inst.sensitive.clone(), score, inst.true_class))
    }

    /// Scores `dataset` through the pairs of each instance's subgroup.
    ///
    /// Massaging contexts only know their training instances, so the
    /// pre-processing approach can score nothing but its training set.
    pub fn score(&self, dataset: &Dataset) -> Result<Vec<ScoredInstance>> {
        let routing = self.routing();
        dataset
            .instances()
            .par_iter()
            .map(|inst| {
                let route = routing
                    .get(&inst.sensitive)
                    .ok_or_else(|| Error::UnknownSubgroup(format!("subgroup {} unseen in training", inst.sensitive)))?;
                self.score_one(inst, route)
            })
            .collect()
    }

    /// Search metric: pre-processing always targets demographic parity.
    pub fn search_metric(&self, requested: MetricSpec) -> MetricSpec {
        match self.method.stage() {
            Stage::Pre => MetricSpec::new(Criterion::DemographicParity, requested.form),
            _ => requested,
        }
    }

    pub fn search(&self, config: &SearchConfig, epsilons: &[f64]) -> Result<Vec<SearchOutcome>> {
        let cfg = SearchConfig { metric: self.search_metric(config.metric), ..config.clone() };
        search_thresholds_multi(&self.train_scores, &cfg, epsilons)
    }

    /// Training-set labels `Z` under the chosen thresholds.
    pub fn train_labels(&self, outcome: &SearchOutcome) -> Result<Vec<ClassLabel>> {
        apply_thresholds(&self.train_scores, &outcome.thresholds)
    }

    /// Test predictions for one search outcome.
    pub fn predict(
        &self,
        train: &Dataset,
        test: &Dataset,
        outcome: &SearchOutcome,
        plain: &TrainConfig,
    ) -> Result<OvoPrediction> {
        match self.method.stage() {
            Stage::Pre => {
                let mitigated = train.with_true_classes(&self.train_labels(outcome)?)?;
                let model = fit(&mitigated, plain)?;
                Ok(OvoPrediction {
                    predictions: model.predict_all(test, 0.5)?,
                    test_scores: None,
                    final_model: Some(model),
                })
            }
            _ => {
                let scores = self.score(test)?;
                Ok(OvoPrediction {
                    predictions: apply_thresholds(&scores, &outcome.thresholds)?,
                    test_scores: Some(scores),
                    final_model: None,
                })
            }
        }
    }

    /// Test labels for several outcomes, scoring the test set at most once.
    pub fn predict_each(
        &self,
        train: &Dataset,
        test: &Dataset,
        outcomes: &[SearchOutcome],
        plain: &TrainConfig,
    ) -> Result<Vec<Vec<ClassLabel>>> {
        match self.method.stage() {
            Stage::Pre => outcomes.iter().map(|o| Ok(self.predict(train, test, o, plain)?.predictions)).collect(),
            _ => {
                let scores = self.score(test)?;
                outcomes.iter().map(|o| apply_thresholds(&scores, &o.thresholds)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OvoPrediction {
    pub predictions: Vec<ClassLabel>,
    /// Absent for pre-processing, whose predictions come from `final_model`.
    pub test_scores: Option<Vec<ScoredInstance>>,
    pub final_model: Option<LogisticModel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessingOutput {
    /// Training set with each class replaced by its thresholded label.
    pub mitigated: Dataset,
    pub model: LogisticModel,
    pub search: SearchOutcome,
    pub fitted: FittedOvo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OvoOutput {
    pub predictions: Vec<ClassLabel>,
    pub test_scores: Vec<ScoredInstance>,
    pub search: SearchOutcome,
    pub fitted: FittedOvo,
}

fn check_stage(method: MitigatorKind, stage: Stage) -> Result<()> {
    if method.stage() != stage {
        return Err(Error::Config(format!("{method} does not belong to the {stage:?} stage")));
    }
    Ok(())
}

fn single_search(fitted: &FittedOvo, config: &OvoConfig) -> Result<SearchOutcome> {
    Ok(fitted.search(&config.search, &[config.search.epsilon])?.remove(0))
}

/// Massaging per pair, thresholds on the training scores, then a plain
/// model trained on the relabeled data.
pub fn run_preprocessing(u: &Dataset, config: &OvoConfig) -> Result<PreprocessingOutput> {
    let fitted = fit_ovo(u, MitigatorKind::Massaging, config)?;
    let search = single_search(&fitted, config)?;
    let mitigated = u.with_true_classes(&fitted.train_labels(&search)?)?;
    let model = fit(&mitigated, &config.plain)?;
    Ok(PreprocessingOutput { mitigated, model, search, fitted })
}

pub fn run_inprocessing(u: &Dataset, test: &Dataset, config: &OvoConfig) -> Result<OvoOutput> {
    run_scored(u, test, MitigatorKind::FairLr, Stage::In, config)
}

pub fn run_postprocessing(u: &Dataset, test: &Dataset, method: MitigatorKind, config: &OvoConfig) -> Result<OvoOutput> {
    run_scored(u, test, method, Stage::Post, config)
}

fn run_scored(
    u: &Dataset,
    test: &Dataset,
    method: MitigatorKind,
    stage: Stage,
    config: &OvoConfig,
) -> Result<OvoOutput> {
    check_stage(method, stage)?;
    let fitted = fit_ovo(u, method, config)?;
    let search = single_search(&fitted, config)?;
    let test_scores = fitted.score(test)?;
    let predictions = apply_thresholds(&test_scores, &search.thresholds)?;
    Ok(OvoOutput { predictions, test_scores, search, fitted })
}

/// Conventional single-attribute mitigation: the dataset is collapsed to
/// the two values of `attribute` and the method is applied to that one
/// pair directly, without thresholds.
pub fn run_single_attribute(
    u: &Dataset,
    test: &Dataset,
    attribute: &str,
    method: MitigatorKind,
    config: &OvoConfig,
) -> Result<Vec<ClassLabel>> {
    let train = u.project_attribute(attribute)?;
    let test = test.project_attribute(attribute)?;
    let plain = match method.stage() {
        Stage::Post => Some(fit(&train, &config.plain)?),
        _ => None,
    };
    let (ctx, relabeled) = fit_pair(method, &train, plain.as_ref(), &config.mitigators)?;
    match method.stage() {
        Stage::Pre => {
            let relabeled = relabeled.expect("massaging returns relabeled data");
            fit(&relabeled, &config.plain)?.predict_all(&test, 0.5)
        }
        _ => test.instances().iter().map(|inst| Ok(ctx.evaluate(inst, plain.as_ref(), config.seed)?.class)).collect(),
    }
}
