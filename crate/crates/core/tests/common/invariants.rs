//! Invariant checks over generated data. Each runs its cases on the given
//! runner and reports the minimal failing input, if any.

use std::collections::{BTreeMap, BTreeSet};

use ovo_core::classifier::{fit, fit_with_trace, TrainConfig};
use ovo_core::data::{enumerate_pairs, enumerate_subgroups, pairs_for_subgroup, ClassLabel, Dataset, Instance};
use ovo_core::datasets::{generate_synthetic, kfold_split, SyntheticSpec};
use ovo_core::harness::{
    dataset_fingerprint, render_csv, render_json, Approach, DatasetSource, ExperimentConfig, Report, Runner,
};
use ovo_core::metrics::{balanced_accuracy, disparity, Criterion, DisparityForm, MetricSpec};
use ovo_core::mitigators::{
    fit_pair, roc_eval, roc_fit, EoCriterion, EoState, MitigatorKind, MitigatorSettings, MixingRates, PairContext,
    PairState,
};
use ovo_core::ovo::{
    apply_thresholds, score_instance, search_thresholds, search_thresholds_multi, vote_weight, ScoredInstance,
    SearchConfig, ThresholdMap,
};
use ovo_core::SubgroupPair;
use proptest::prelude::*;
use proptest::test_runner::TestRunner;

use super::{criterion, form, label, labeled, one_attribute, oracle, pair_rows, scored, two_attributes};

pub type Check = fn(&mut TestRunner) -> Result<(), String>;

pub const ALL: &[(&str, Check)] = &[
    ("subgroups partition the instances", partition_and_pair_counts),
    ("enumeration ignores row order", enumeration_is_order_free),
    ("k-fold splits partition the data", kfold_partition),
    ("synthetic generation is deterministic", synthetic_is_deterministic),
    ("accepted steps lower the loss; fit is deterministic", loss_decreases_and_fit_repeats),
    ("probabilities stay inside (0, 1)", proba_strictly_inside),
    ("mitigator outputs obey the contract", mitigator_contract),
    ("massaging conserves favorable labels", massaging_conserves_favorable),
    ("zero-width reject option equals the plain model", roc_zero_width_is_plain),
    ("identity mixing equals the plain model", eo_identity_is_plain),
    ("metrics equal the counting oracle", metrics_match_oracle),
    ("disparity is zero exactly at parity", gamma_zero_iff_parity),
    ("metrics ignore row order", metrics_permutation_invariant),
    ("scores are bounded; massaging scores are vote multiples", score_bounds_and_levels),
    ("more votes never lower the score", vote_dominance),
    ("unconstrained search beats any shared threshold", unconstrained_beats_shared),
    ("reported feasibility holds on recomputation", feasible_means_below_limit),
    ("accuracy is non-decreasing in the limit", accuracy_monotone_in_limit),
    ("search equals exhaustive enumeration", search_matches_oracle),
    ("same config and seed give identical reports", reports_are_reproducible),
];

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn labels(v: &[bool]) -> Vec<ClassLabel> {
    v.iter().map(|&b| label(b)).collect()
}

pub fn partition_and_pair_counts(runner: &mut TestRunner) -> Result<(), String> {
    let rows = (1usize..4, 1usize..4)
        .prop_flat_map(|(a, b)| (Just((a, b)), prop::collection::vec((0..a, 0..b, any::<bool>()), 1..60)));
    runner
        .run(&rows, |(card, rows)| {
            let ds = two_attributes(&rows, card);
            let sizes = ds.subgroup_sizes();
            prop_assert_eq!(sizes.values().sum::<usize>(), ds.len());
            for inst in ds.instances() {
                prop_assert_eq!(sizes.keys().filter(|k| **k == inst.sensitive).count(), 1);
            }
            let subgroups = enumerate_subgroups(&ds);
            let s = subgroups.len();
            prop_assert_eq!(s, sizes.len());
            if s >= 2 {
                let pairs = enumerate_pairs(&subgroups).unwrap();
                prop_assert_eq!(pairs.len(), s * (s - 1) / 2);
                for g in &subgroups {
                    prop_assert_eq!(pairs_for_subgroup(&pairs, g).unwrap().len(), s - 1);
                }
            } else {
                prop_assert!(enumerate_pairs(&subgroups).is_err());
            }
            Ok(())
        })
        .map_err(fail)
}

pub fn enumeration_is_order_free(runner: &mut TestRunner) -> Result<(), String> {
    let input = prop::collection::vec((0..3usize, 0..2usize, any::<bool>()), 2..40)
        .prop_flat_map(|rows| (Just(rows.clone()), Just(rows).prop_shuffle()));
    runner
        .run(&input, |(rows, shuffled)| {
            let a = two_attributes(&rows, (3, 2));
            let b = two_attributes(&shuffled, (3, 2));
            prop_assert_eq!(enumerate_subgroups(&a), enumerate_subgroups(&b));
            prop_assert_eq!(enumerate_subgroups(&a), enumerate_subgroups(&a.clone()));
            if enumerate_subgroups(&a).len() >= 2 {
                prop_assert_eq!(
                    enumerate_pairs(&enumerate_subgroups(&a)).unwrap(),
                    enumerate_pairs(&enumerate_subgroups(&b)).unwrap()
                );
            }
            Ok(())
        })
        .map_err(fail)
}

pub fn kfold_partition(runner: &mut TestRunner) -> Result<(), String> {
    let input = (2usize..8, 8usize..80, any::<u64>());
    runner
        .run(&input, |(k, n, seed)| {
            let rows: Vec<(usize, Vec<f64>, bool)> = (0..n).map(|i| (i % 2, vec![], i % 3 == 0)).collect();
            let ds = one_attribute(&rows, 2, 0);
            let folds = kfold_split(&ds, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            let mut tested = Vec::new();
            for f in &folds {
                let train: BTreeSet<usize> = f.train.instances().iter().map(|i| i.id).collect();
                let test: Vec<usize> = f.test.instances().iter().map(|i| i.id).collect();
                prop_assert!(test.iter().all(|id| !train.contains(id)));
                prop_assert_eq!(train.len() + test.len(), n);
                prop_assert!(test.len() == n / k || test.len() == n / k + 1);
                tested.extend(test);
            }
            tested.sort_unstable();
            prop_assert_eq!(tested, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(
                kfold_split(&ds, k, seed).unwrap().iter().map(|f| f.test.clone()).collect::<Vec<_>>(),
                folds.iter().map(|f| f.test.clone()).collect::<Vec<_>>()
            );
            Ok(())
        })
        .map_err(fail)
}

pub fn synthetic_is_deterministic(runner: &mut TestRunner) -> Result<(), String> {
    let input = (prop::array::uniform4(1usize..40), prop::array::uniform4(0.0..=1.0f64), any::<u64>());
    runner
        .run(&input, |(sizes, rates, seed)| {
            let spec = SyntheticSpec::race_gender(sizes, rates, seed);
            let a = generate_synthetic(&spec).unwrap();
            let b = generate_synthetic(&spec).unwrap();
            prop_assert_eq!(dataset_fingerprint(&a), dataset_fingerprint(&b));
            prop_assert_eq!(a.len(), sizes.iter().sum::<usize>());
            Ok(())
        })
        .map_err(fail)
}

fn trainable_rows() -> impl Strategy<Value = Vec<(usize, Vec<f64>, bool)>> {
    pair_rows(40)
}

pub fn loss_decreases_and_fit_repeats(runner: &mut TestRunner) -> Result<(), String> {
    let input = (trainable_rows(), any::<bool>(), 0.0..2.0f64);
    runner
        .run(&input, |(rows, balance, l2)| {
            let ds = one_attribute(&rows, 2, 2);
            let cfg = TrainConfig { balance_classes: balance, l2_strength: l2, ..TrainConfig::default() };
            let (model, trace) = fit_with_trace(&ds, &cfg).unwrap();
            prop_assert!(!trace.is_empty());
            for w in trace.windows(2) {
                prop_assert!(w[1] < w[0], "loss rose from {} to {}", w[0], w[1]);
            }
            let again = fit(&ds, &cfg).unwrap();
            prop_assert_eq!(&again, &model);
            prop_assert!(again.weights.iter().zip(&model.weights).all(|(a, b)| a.to_bits() == b.to_bits()));
            Ok(())
        })
        .map_err(fail)
}

pub fn proba_strictly_inside(runner: &mut TestRunner) -> Result<(), String> {
    let input = (trainable_rows(), prop::collection::vec(-1e6..1e6f64, 2), 0..2usize);
    runner
        .run(&input, |(rows, x, g)| {
            let ds = one_attribute(&rows, 2, 2);
            let model = fit(&ds, &TrainConfig::default()).unwrap();
            let probe = Instance::new(usize::MAX, super::group_key(g), x, ClassLabel::Favorable);
            let p = model.predict_proba(&probe).unwrap();
            prop_assert!(p > 0.0 && p < 1.0, "p = {p}");
            for p in model.predict_proba_all(&ds).unwrap() {
                prop_assert!(p > 0.0 && p < 1.0);
            }
            Ok(())
        })
        .map_err(fail)
}

fn pair_of(ds: &Dataset) -> SubgroupPair {
    let keys = enumerate_subgroups(ds);
    SubgroupPair::new(keys[0].clone(), keys[1].clone()).unwrap()
}

pub fn mitigator_contract(runner: &mut TestRunner) -> Result<(), String> {
    let input = (pair_rows(30), prop::sample::select(MitigatorKind::ALL.to_vec()), any::<u64>());
    runner
        .run(&input, |(rows, kind, seed)| {
            let ds = one_attribute(&rows, 2, 2);
            let settings = MitigatorSettings::default();
            let plain = fit(&ds, &settings.train).unwrap();
            let (ctx, _) = fit_pair(kind, &ds, Some(&plain), &settings).unwrap();
            prop_assert!(ctx.pair.contains(&ctx.deprived));
            for inst in ds.instances() {
                let e = ctx.evaluate(inst, Some(&plain), seed).unwrap();
                prop_assert!((0.0..=1.0).contains(&e.proba));
                if kind == MitigatorKind::Massaging {
                    prop_assert_eq!(e.proba, 0.0);
                }
            }
            let back = PairContext::from_json(&ctx.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, ctx);
            Ok(())
        })
        .map_err(fail)
}

pub fn massaging_conserves_favorable(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&pair_rows(40), |rows| {
            let ds = one_attribute(&rows, 2, 2);
            let (ctx, relabeled) =
                fit_pair(MitigatorKind::Massaging, &ds, None, &MitigatorSettings::default()).unwrap();
            let relabeled = relabeled.unwrap();
            prop_assert_eq!(relabeled.positive_count(), ds.positive_count());
            let PairState::Massaging(state) = &ctx.state else { unreachable!() };
            prop_assert_eq!(state.promoted.len(), state.modifications);
            prop_assert_eq!(state.demoted.len(), state.modifications);
            Ok(())
        })
        .map_err(fail)
}

pub fn roc_zero_width_is_plain(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&pair_rows(40), |rows| {
            let ds = one_attribute(&rows, 2, 2);
            let plain = fit(&ds, &TrainConfig::default()).unwrap();
            let ctx = roc_fit(&plain, &ds, &[0.0]).unwrap();
            for inst in ds.instances() {
                prop_assert_eq!(roc_eval(inst, &ctx, &plain).unwrap().class, plain.predict(inst, 0.5).unwrap());
            }
            Ok(())
        })
        .map_err(fail)
}

pub fn eo_identity_is_plain(runner: &mut TestRunner) -> Result<(), String> {
    let input = (pair_rows(40), any::<u64>(), prop::sample::select(vec![EoCriterion::Odds, EoCriterion::Opportunity]));
    runner
        .run(&input, |(rows, seed, crit)| {
            let ds = one_attribute(&rows, 2, 2);
            let plain = fit(&ds, &TrainConfig::default()).unwrap();
            let pair = pair_of(&ds);
            let rates = pair.members().into_iter().map(|k| (k.clone(), MixingRates::IDENTITY)).collect();
            let ctx = PairContext {
                deprived: pair.first().clone(),
                pair,
                state: PairState::EqualizedOdds(EoState { criterion: crit, rates }),
            };
            for inst in ds.instances() {
                let e = ctx.evaluate(inst, Some(&plain), seed).unwrap();
                prop_assert_eq!(e.class, plain.predict(inst, 0.5).unwrap());
                prop_assert_eq!(e.proba, plain.predict_proba(inst).unwrap());
            }
            Ok(())
        })
        .map_err(fail)
}

/// One generated case checked against the counting oracle.
pub fn metric_case(preds: &[bool], truths: &[bool], groups: &[usize], criterion: Criterion) -> Result<(), String> {
    let preds = labels(preds);
    let truths = labels(truths);
    let groups: Vec<_> = groups.iter().map(|&g| super::group_key(g)).collect();
    let ours = disparity(&preds, &truths, &groups, criterion);
    let expected = oracle::disparity(&preds, &truths, &groups, criterion);
    match (ours, expected) {
        (Err(_), None) => {}
        (Ok(r), Some(o)) => {
            if r.overall != o.overall || r.per_subgroup != o.per_subgroup {
                return Err(format!("values differ: {:?} vs {} {:?}", r, o.overall, o.per_subgroup));
            }
            if r.gamma_diff != o.gamma_diff || r.gamma_ratio != o.gamma_ratio {
                return Err(format!(
                    "gammas differ: ({}, {}) vs ({}, {})",
                    r.gamma_diff, r.gamma_ratio, o.gamma_diff, o.gamma_ratio
                ));
            }
            if r.balanced_accuracy != oracle::balanced_accuracy(&preds, &truths) {
                return Err("balanced accuracy differs".into());
            }
        }
        (ours, expected) => {
            return Err(format!("definedness differs: {:?} vs {}", ours.map(|r| r.overall), expected.is_some()))
        }
    }
    let acc = balanced_accuracy(&preds, &truths).ok();
    if acc != oracle::balanced_accuracy(&preds, &truths) {
        return Err("balanced_accuracy() differs".into());
    }
    Ok(())
}

pub fn metrics_match_oracle(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&(labeled(50, 4), criterion()), |((p, t, g), c)| metric_case(&p, &t, &g, c).map_err(TestCaseError::fail))
        .map_err(fail)
}

pub fn gamma_zero_iff_parity(runner: &mut TestRunner) -> Result<(), String> {
    runner
        .run(&(labeled(40, 4), criterion()), |((p, t, g), c)| {
            let groups: Vec<_> = g.iter().map(|&g| super::group_key(g)).collect();
            let Ok(r) = disparity(&labels(&p), &labels(&t), &groups, c) else { return Ok(()) };
            let parity = r.per_subgroup.values().all(|&v| v == r.overall);
            prop_assert_eq!(r.gamma_diff == 0.0, parity);
            prop_assert!(r.gamma_ratio >= 0.0 && r.gamma_ratio <= 1.0);
            prop_assert!(r.gamma_diff >= 0.0 && r.gamma_diff <= 1.0);
            if r.overall != 0.0 && r.per_subgroup.values().all(|&v| v != 0.0) {
                prop_assert_eq!(r.gamma_ratio == 0.0, parity);
            }
            if r.per_subgroup.len() == 1 && r.skipped.is_empty() {
                prop_assert_eq!(r.gamma_diff, 0.0);
                prop_assert_eq!(r.gamma_ratio, 0.0);
            }
            Ok(())
        })
        .map_err(fail)
}

pub fn metrics_permutation_invariant(runner: &mut TestRunner) -> Result<(), String> {
    let input = (labeled(40, 4), criterion()).prop_flat_map(|((p, t, g), c)| {
        let idx: Vec<usize> = (0..p.len()).collect();
        (Just((p, t, g, c)), Just(idx).prop_shuffle())
    });
    runner
        .run(&input, |((p, t, g, c), perm)| {
            let groups: Vec<_> = g.iter().map(|&g| super::group_key(g)).collect();
            let a = disparity(&labels(&p), &labels(&t), &groups, c);
            let pick = |v: &[bool]| perm.iter().map(|&i| label(v[i])).collect::<Vec<_>>();
            let pg: Vec<_> = perm.iter().map(|&i| groups[i].clone()).collect();
            let b = disparity(&pick(&p), &pick(&t), &pg, c);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "definedness changed under permutation"),
            }
            Ok(())
        })
        .map_err(fail)
}

pub fn score_bounds_and_levels(runner: &mut TestRunner) -> Result<(), String> {
    let input = (2usize..8).prop_flat_map(|s| {
        let k = s - 1;
        (
            Just(s),
            prop::collection::vec(
                (prop::collection::vec(any::<bool>(), k), prop::collection::vec(0.0..=1.0f64, k)),
                1..30,
            ),
        )
    });
    runner
        .run(&input, |(s, rows)| {
            let w = vote_weight(s);
            let mut ms_levels = BTreeSet::new();
            for (votes, probas) in &rows {
                let votes = labels(votes);
                let t = score_instance(&votes, probas, s).unwrap();
                prop_assert!((0.0..=1.0).contains(&t.score));
                let ms = score_instance(&votes, &vec![0.0; s - 1], s).unwrap();
                prop_assert_eq!(ms.score, w * ms.vote_ratio);
                ms_levels.insert(ms.score.to_bits());
            }
            prop_assert!(ms_levels.len() <= s);
            Ok(())
        })
        .map_err(fail)
}

pub fn vote_dominance(runner: &mut TestRunner) -> Result<(), String> {
    let input = (2usize..8).prop_flat_map(|s| {
        let k = s - 1;
        (
            Just(s),
            prop::collection::vec(any::<bool>(), k),
            prop::collection::vec(any::<bool>(), k),
            prop::collection::vec(0.0..=1.0f64, k),
            prop::collection::vec(0.0..=1.0f64, k),
        )
    });
    runner
        .run(&input, |(s, vi, vj, pi, pj)| {
            let a = score_instance(&labels(&vi), &pi, s).unwrap();
            let b = score_instance(&labels(&vj), &pj, s).unwrap();
            if a.vote_ratio > b.vote_ratio {
                prop_assert!(a.score >= b.score, "{a:?} vs {b:?}");
            }
            Ok(())
        })
        .map_err(fail)
}

fn search_cfg(epsilon: f64, criterion: Criterion, form: DisparityForm) -> SearchConfig {
    SearchConfig::new(epsilon, MetricSpec::new(criterion, form))
}

fn overall_defined(scored: &[ScoredInstance], c: Criterion) -> bool {
    let pos = scored.iter().filter(|s| s.true_class.is_favorable()).count();
    match c {
        Criterion::DemographicParity => true,
        Criterion::EqualOpportunity => pos > 0,
        Criterion::EqualizedOdds => pos > 0 && pos < scored.len(),
    }
}

pub fn unconstrained_beats_shared(runner: &mut TestRunner) -> Result<(), String> {
    let input = (scored(40, 4), criterion(), prop::collection::vec(-0.1..=1.1f64, 1..10));
    runner
        .run(&input, |(rows, c, shared)| {
            let out = search_thresholds(&rows, &search_cfg(1.0, c, DisparityForm::Difference))
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let truths: Vec<ClassLabel> = rows.iter().map(|r| r.true_class).collect();
            let keys: BTreeSet<_> = rows.iter().map(|r| r.subgroup.clone()).collect();
            for theta in shared {
                let z = apply_thresholds(&rows, &ThresholdMap::uniform(&keys, theta)).unwrap();
                prop_assert!(out.balanced_accuracy >= balanced_accuracy(&z, &truths).unwrap());
            }
            Ok(())
        })
        .map_err(fail)
}

fn recomputed_gamma(rows: &[ScoredInstance], thresholds: &ThresholdMap, metric: MetricSpec) -> f64 {
    let z = apply_thresholds(rows, thresholds).unwrap();
    let truths: Vec<ClassLabel> = rows.iter().map(|r| r.true_class).collect();
    let groups: Vec<_> = rows.iter().map(|r| r.subgroup.clone()).collect();
    disparity(&z, &truths, &groups, metric.criterion).unwrap().gamma(metric.form)
}

pub fn feasible_means_below_limit(runner: &mut TestRunner) -> Result<(), String> {
    let input = (scored(60, 4), criterion(), form(), 0.001..0.5f64);
    runner
        .run(&input, |(rows, c, f, eps)| {
            if !overall_defined(&rows, c) {
                return Ok(());
            }
            let cfg = search_cfg(eps, c, f);
            let out = search_thresholds(&rows, &cfg).unwrap();
            let g = recomputed_gamma(&rows, &out.thresholds, cfg.metric);
            prop_assert_eq!(g, out.gamma);
            prop_assert_eq!(out.feasible, g < eps);
            Ok(())
        })
        .map_err(fail)
}

pub fn accuracy_monotone_in_limit(runner: &mut TestRunner) -> Result<(), String> {
    let input = (scored(60, 4), criterion(), form(), prop::collection::vec(0.001..=1.0f64, 2..8));
    runner
        .run(&input, |(rows, c, f, mut eps)| {
            if !overall_defined(&rows, c) {
                return Ok(());
            }
            eps.sort_by(f64::total_cmp);
            let cfg = search_cfg(eps[0], c, f);
            let outs = search_thresholds_multi(&rows, &cfg, &eps).unwrap();
            for w in outs.windows(2) {
                if w[0].feasible {
                    prop_assert!(w[1].feasible && w[1].balanced_accuracy >= w[0].balanced_accuracy);
                }
            }
            for (o, &e) in outs.iter().zip(&eps) {
                let single = search_thresholds(&rows, &SearchConfig { epsilon: e, ..cfg.clone() }).unwrap();
                prop_assert_eq!(single.balanced_accuracy, o.balanced_accuracy);
                prop_assert_eq!(single.feasible, o.feasible);
            }
            Ok(())
        })
        .map_err(fail)
}

/// One search case checked against exhaustive enumeration.
pub fn search_case(rows: &[ScoredInstance], c: Criterion, f: DisparityForm, eps: f64) -> Result<(), String> {
    let Some(best) = oracle::best_thresholds(rows, c, f, eps) else {
        return match search_thresholds(rows, &search_cfg(eps, c, f)) {
            Err(_) => Ok(()),
            Ok(o) => Err(format!("search succeeded where the metric is undefined: {o:?}")),
        };
    };
    let out = search_thresholds(rows, &search_cfg(eps, c, f)).map_err(fail)?;
    if out.feasible != best.feasible || out.balanced_accuracy != best.balanced_accuracy {
        return Err(format!("search {out:?} vs oracle {best:?}"));
    }
    if !best.feasible && out.gamma != best.gamma {
        return Err(format!("infeasible gamma {} vs oracle {}", out.gamma, best.gamma));
    }
    Ok(())
}

pub fn search_matches_oracle(runner: &mut TestRunner) -> Result<(), String> {
    let eps = prop::sample::select(vec![0.01, 0.05, 0.1, 0.2, 0.5, 1.0]);
    runner
        .run(&(scored(30, 3), criterion(), form(), eps), |(rows, c, f, e)| {
            search_case(&rows, c, f, e).map_err(TestCaseError::fail)
        })
        .map_err(fail)
}

pub fn reports_are_reproducible(runner: &mut TestRunner) -> Result<(), String> {
    let input = (any::<u64>(), prop::sample::select(vec![MitigatorKind::Massaging, MitigatorKind::RejectOption]));
    let config = proptest::test_runner::Config { cases: 3, ..runner.config().clone() };
    TestRunner::new_with_rng(config, runner.new_rng())
        .run(&input, |(seed, method)| {
            let spec = SyntheticSpec::race_gender([50, 40, 30, 30], [0.6, 0.45, 0.4, 0.2], seed);
            let ds = generate_synthetic(&spec).unwrap();
            let cfg = ExperimentConfig {
                seed,
                epsilon: 0.1,
                folds: 3,
                ..ExperimentConfig::new(DatasetSource::Compas, Approach::Ovo, Criterion::DemographicParity)
                    .with_method(method)
            };
            let a = Runner::default().run_on(&ds, &cfg).unwrap();
            let b = Runner::default().run_on(&ds, &cfg).unwrap();
            prop_assert_eq!(render_csv(&a).unwrap(), render_csv(&b).unwrap());
            prop_assert_eq!(render_json(&Report::new(a)).unwrap(), render_json(&Report::new(b)).unwrap());
            let base = ExperimentConfig { approach: Approach::BaselineSingleAttribute, ..cfg };
            let per_attr: BTreeMap<_, _> = Runner::default()
                .run_on(&ds, &base)
                .unwrap()
                .into_iter()
                .map(|r| (r.attribute.clone().unwrap(), r.folds.len()))
                .collect();
            prop_assert_eq!(per_attr.len(), 2);
            Ok(())
        })
        .map_err(fail)
}
