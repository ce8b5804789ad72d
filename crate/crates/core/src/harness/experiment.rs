use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{dataset_fingerprint, ModelCache};
use super::config::{load_dataset, resolve_data_dir, Approach, DatasetSource, ExperimentConfig};
use crate::classifier::{self, LogisticModel, TrainConfig};
use crate::data::{ClassLabel, Dataset};
use crate::datasets::{kfold_split, FoldSplit};
use crate::error::{Error, Result};
use crate::metrics::{balanced_accuracy, disparity, Criterion, DisparityReport, MetricSpec};
use crate::mitigators::{MitigatorKind, MitigatorSettings};
use crate::ovo::{fit_ovo, run_single_attribute, FittedOvo, OvoConfig, SearchOutcome};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

const FAIR_LR_NOTE: &str = "FAIR_LR (logistic regression with a subgroup mean-probability penalty) \
                            replaces adversarial debiasing as the in-processing method";
const COMPAS_NOTE: &str = "COMPAS favorable class is no two-year recidivism (two_year_recid = 0)";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        if values.is_empty() {
            return Stat { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, std }
    }
}

/// Outcome of the threshold search on the training fold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub gamma: f64,
    pub balanced_accuracy: f64,
    pub feasible: bool,
}

impl From<&SearchOutcome> for TrainSummary {
    fn from(o: &SearchOutcome) -> Self {
        TrainSummary { gamma: o.gamma, balanced_accuracy: o.balanced_accuracy, feasible: o.feasible }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub balanced_accuracy: f64,
    /// Test-fold disparity for every criterion, in `Criterion::ALL` order.
    pub reports: Vec<DisparityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSummary>,
}

impl FoldResult {
    pub fn report(&self, criterion: Criterion) -> &DisparityReport {
        self.reports.iter().find(|r| r.criterion == criterion).expect("fold results cover every criterion")
    }

    pub fn gamma(&self, metric: MetricSpec) -> f64 {
        self.report(metric.criterion).gamma(metric.form)
    }

    /// `None` when no threshold search ran.
    pub fn feasible(&self) -> Option<bool> {
        self.train.map(|t| t.feasible)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    /// The mitigated attribute of a single-attribute baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    pub folds: Vec<FoldResult>,
    /// Test-fold disparity for the configured criterion and form.
    pub gamma: Stat,
    pub balanced_accuracy: Stat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_gamma: Option<Stat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_balanced_accuracy: Option<Stat>,
    pub infeasible_folds: Vec<usize>,
    pub notes: Vec<String>,
}

impl RunResult {
    fn assemble(config: &ExperimentConfig, attribute: Option<String>, folds: Vec<FoldResult>) -> Self {
        let metric = config.metric();
        let collect = |f: &dyn Fn(&FoldResult) -> f64| Stat::of(&folds.iter().map(f).collect::<Vec<_>>());
        let trained: Vec<TrainSummary> = folds.iter().filter_map(|f| f.train).collect();
        let train_stat = |f: fn(&TrainSummary) -> f64| {
            (!trained.is_empty()).then(|| Stat::of(&trained.iter().map(f).collect::<Vec<_>>()))
        };
        RunResult {
            schema_version: REPORT_SCHEMA_VERSION,
            config: config.clone(),
            attribute,
            gamma: collect(&|f| f.gamma(metric)),
            balanced_accuracy: collect(&|f| f.balanced_accuracy),
            train_gamma: train_stat(|t| t.gamma),
            train_balanced_accuracy: train_stat(|t| t.balanced_accuracy),
            infeasible_folds: folds.iter().filter(|f| f.feasible() == Some(false)).map(|f| f.fold).collect(),
            notes: deviation_notes(config),
            folds,
        }
    }

    /// `approach`, or `approach:attribute` for single-attribute baselines.
    pub fn label(&self) -> String {
        match &self.attribute {
            Some(attr) => format!("{}:{attr}", self.config.approach),
            None => self.config.approach.to_string(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    /// Test-fold mean and spread for any criterion and form.
    pub fn stat(&self, metric: MetricSpec) -> Stat {
        Stat::of(&self.folds.iter().map(|f| f.gamma(metric)).collect::<Vec<_>>())
    }

    /// True when thresholds were searched and no fold met the limit.
    pub fn all_infeasible(&self) -> bool {
        !self.folds.is_empty() && self.folds.iter().all(|f| f.feasible() == Some(false))
    }
}

fn deviation_notes(config: &ExperimentConfig) -> Vec<String> {
    let mut notes = Vec::new();
    if config.approach != Approach::Plain && config.method == Some(MitigatorKind::FairLr) {
        notes.push(FAIR_LR_NOTE.to_string());
    }
    if config.dataset == DatasetSource::Compas {
        notes.push(COMPAS_NOTE.to_string());
    }
    notes
}

/// `start, start + step, ...` up to `end`, rounded to ten decimals so the
/// values print cleanly.
pub fn epsilon_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && start <= end && end <= 1.0) || !(step > 0.0) {
        return Err(Error::Config(format!(
            "sweep needs 0 < start <= end <= 1 and step > 0, got start={start} end={end} step={step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10).collect())
}

/// One row of a sweep's series table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub label: String,
    pub epsilon: f64,
    pub balanced_accuracy: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_balanced_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_gamma: Option<f64>,
    pub feasible_folds: usize,
}

impl From<&RunResult> for SeriesPoint {
    fn from(r: &RunResult) -> Self {
        SeriesPoint {
            label: r.label(),
            epsilon: r.epsilon(),
            balanced_accuracy: r.balanced_accuracy.mean,
            gamma: r.gamma.mean,
            train_balanced_accuracy: r.train_balanced_accuracy.map(|s| s.mean),
            train_gamma: r.train_gamma.map(|s| s.mean),
            feasible_folds: r.folds.iter().filter(|f| f.feasible() == Some(true)).count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub results: Vec<RunResult>,
    pub series: Vec<SeriesPoint>,
}

#[derive(Serialize)]
struct FoldKey<'a> {
    kind: &'static str,
    dataset: &'a str,
    folds: usize,
    split_seed: u64,
    fold: usize,
    method: Option<MitigatorKind>,
    plain: &'a TrainConfig,
    mitigators: Option<&'a MitigatorSettings>,
    seed: u64,
}

/// Runs experiments, optionally reusing fitted per-fold models from disk.
#[derive(Clone, Debug, Default)]
pub struct Runner {
    /// Adult/COMPAS directory; see [`resolve_data_dir`] for the fallback.
    pub data_dir: Option<PathBuf>,
    pub cache: Option<ModelCache>,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    ovo: OvoConfig,
    fingerprint: Option<String>,
    splits: Vec<FoldSplit>,
}

impl Runner {
    pub fn load(&self, config: &ExperimentConfig) -> Result<Dataset> {
        load_dataset(&config.dataset, &resolve_data_dir(self.data_dir.as_deref()))
    }

    /// One result per mitigated attribute for single-attribute baselines,
    /// otherwise exactly one.
    pub fn run(&self, config: &ExperimentConfig) -> Result<Vec<RunResult>> {
        config.validate()?;
        self.run_on(&self.load(config)?, config)
    }

    pub fn run_on(&self, dataset: &Dataset, config: &ExperimentConfig) -> Result<Vec<RunResult>> {
        config.validate()?;
        Ok(self.sweep_on(dataset, config, &[config.epsilon])?.results)
    }

    pub fn sweep(&self, config: &ExperimentConfig, epsilons: &[f64]) -> Result<Sweep> {
        config.validate()?;
        self.sweep_on(&self.load(config)?, config, epsilons)
    }

    /// Results ordered by attribute (baselines), then by `epsilons`.
    ///
    /// The one-vs-one pipeline is fitted once per fold and only the
    /// threshold search repeats per limit; the other approaches ignore the
    /// limit and are evaluated once.
    pub fn sweep_on(&self, dataset: &Dataset, config: &ExperimentConfig, epsilons: &[f64]) -> Result<Sweep> {
        config.validate()?;
        if epsilons.is_empty() {
            return Err(Error::Config("no epsilon values to evaluate".into()));
        }
        let ctx = Context {
            config,
            ovo: config.ovo_config(),
            fingerprint: self.cache.as_ref().map(|_| dataset_fingerprint(dataset)),
            splits: kfold_split(dataset, config.folds, config.seed)?,
        };
        let at = |eps: f64| ExperimentConfig { epsilon: eps, ..config.clone() };

        let mut results = Vec::new();
        match config.approach {
            Approach::Plain => {
                let folds = self.per_fold(&ctx, |s| self.plain_fold(&ctx, s))?;
                results.extend(epsilons.iter().map(|&e| RunResult::assemble(&at(e), None, folds.clone())));
            }
            Approach::BaselineSingleAttribute => {
                let method = config.method.expect("validated");
                for attr in dataset.sensitive_schema() {
                    let folds = self.per_fold(&ctx, |s| {
                        let z = run_single_attribute(&s.train, &s.test, &attr.name, method, &ctx.ovo)?;
                        evaluate(s, &z, None)
                    })?;
                    results.extend(
                        epsilons.iter().map(|&e| RunResult::assemble(&at(e), Some(attr.name.clone()), folds.clone())),
                    );
                }
            }
            Approach::Ovo => {
                let per_fold: Vec<Vec<FoldResult>> =
                    ctx.splits.par_iter().map(|s| self.ovo_fold(&ctx, s, epsilons)).collect::<Result<_>>()?;
                for (i, &e) in epsilons.iter().enumerate() {
                    let folds = per_fold.iter().map(|f| f[i].clone()).collect();
                    results.push(RunResult::assemble(&at(e), None, folds));
                }
            }
        }
        let series = results.iter().map(SeriesPoint::from).collect();
        Ok(Sweep { results, series })
    }

    fn per_fold<F>(&self, ctx: &Context<'_>, f: F) -> Result<Vec<FoldResult>>
    where
        F: Fn(&FoldSplit) -> Result<FoldResult> + Sync + Send,
    {
        ctx.splits.par_iter().map(f).collect()
    }

    fn key<'a>(&self, ctx: &'a Context<'_>, kind: &'static str, split: &FoldSplit) -> FoldKey<'a> {
        let method = match kind {
            "plain" => None,
            _ => ctx.config.method,
        };
        FoldKey {
            kind,
            dataset: ctx.fingerprint.as_deref().unwrap_or(""),
            folds: ctx.config.folds,
            split_seed: split.seed,
            fold: split.fold_index,
            method,
            plain: &ctx.ovo.plain,
            mitigators: method.map(|_| &ctx.ovo.mitigators),
            seed: ctx.ovo.seed,
        }
    }

    fn plain_fold(&self, ctx: &Context<'_>, split: &FoldSplit) -> Result<FoldResult> {
        let fit = || classifier::fit(&split.train, &ctx.ovo.plain);
        let model: LogisticModel = match &self.cache {
            Some(cache) => cache.get_or_insert(&self.key(ctx, "plain", split), fit)?,
            None => fit()?,
        };
        evaluate(split, &model.predict_all(&split.test, 0.5)?, None)
    }

    fn ovo_fold(&self, ctx: &Context<'_>, split: &FoldSplit, epsilons: &[f64]) -> Result<Vec<FoldResult>> {
        let method = ctx.config.method.expect("validated");
        let fit = || fit_ovo(&split.train, method, &ctx.ovo);
        let fitted: FittedOvo = match &self.cache {
            Some(cache) => cache.get_or_insert(&self.key(ctx, "ovo", split), fit)?,
            None => fit()?,
        };
        let outcomes = fitted.search(&ctx.ovo.search, epsilons)?;
        for o in outcomes.iter().filter(|o| !o.feasible) {
            log::info!(
                "fold {}: no thresholds reach epsilon {} (best training gamma {:.4})",
                split.fold_index,
                o.epsilon,
                o.gamma
            );
        }
        let predictions = fitted.predict_each(&split.train, &split.test, &outcomes, &ctx.ovo.plain)?;
        outcomes.iter().zip(&predictions).map(|(o, p)| evaluate(split, p, Some(o.into()))).collect()
    }
}

fn evaluate(split: &FoldSplit, predictions: &[ClassLabel], train: Option<TrainSummary>) -> Result<FoldResult> {
    let truths = split.test.true_classes();
    let groups = split.test.subgroup_keys();
    let reports =
        Criterion::ALL.iter().map(|&c| disparity(predictions, &truths, &groups, c)).collect::<Result<Vec<_>>>()?;
    Ok(FoldResult {
        fold: split.fold_index,
        balanced_accuracy: balanced_accuracy(predictions, &truths)?,
        reports,
        train,
    })
}

/// Cross-validated run with the default data directory and no cache.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    Runner::default().run(config)
}

pub fn sweep_epsilon(config: &ExperimentConfig, eps_start: f64, eps_end: f64, eps_step: f64) -> Result<Sweep> {
    Runner::default().sweep(config, &epsilon_grid(eps_start, eps_end, eps_step)?)
}
