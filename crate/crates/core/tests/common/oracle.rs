//! Direct tuple-counting reimplementations, written without the library's
//! confusion-count or candidate-grid machinery.

use std::collections::{BTreeMap, BTreeSet};

use ovo_core::data::{ClassLabel, SubgroupKey};
use ovo_core::metrics::{Criterion, DisparityForm};
use ovo_core::ovo::ScoredInstance;

fn count<F: Fn(usize) -> bool>(n: usize, f: F) -> usize {
    (0..n).filter(|&i| f(i)).count()
}

/// Criterion value over the rows selected by `member`, `None` if undefined.
pub fn value(
    preds: &[ClassLabel],
    truths: &[ClassLabel],
    member: &dyn Fn(usize) -> bool,
    criterion: Criterion,
) -> Option<f64> {
    let n = preds.len();
    let pos = |i: usize| preds[i] == ClassLabel::Favorable;
    let truth = |i: usize| truths[i] == ClassLabel::Favorable;
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let tpr = rate(count(n, |i| member(i) && pos(i) && truth(i)), count(n, |i| member(i) && truth(i)));
    let fpr = rate(count(n, |i| member(i) && pos(i) && !truth(i)), count(n, |i| member(i) && !truth(i)));
    match criterion {
        Criterion::DemographicParity => rate(count(n, |i| member(i) && pos(i)), count(n, member)),
        Criterion::EqualOpportunity => tpr,
        Criterion::EqualizedOdds => Some((tpr? + fpr?) / 2.0),
    }
}

pub fn balanced_accuracy(preds: &[ClassLabel], truths: &[ClassLabel]) -> Option<f64> {
    let n = preds.len();
    let p = count(n, |i| truths[i] == ClassLabel::Favorable);
    let tp = count(n, |i| truths[i] == ClassLabel::Favorable && preds[i] == ClassLabel::Favorable);
    let tn = count(n, |i| truths[i] == ClassLabel::Unfavorable && preds[i] == ClassLabel::Unfavorable);
    (p > 0 && p < n).then(|| (tp as f64 / p as f64 + tn as f64 / (n - p) as f64) / 2.0)
}

pub fn ratio_term(overall: f64, v: f64) -> f64 {
    if overall == 0.0 && v == 0.0 {
        0.0
    } else if overall == 0.0 || v == 0.0 {
        1.0
    } else {
        1.0 - (v / overall).min(overall / v)
    }
}

pub fn gamma(form: DisparityForm, overall: f64, values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &v in values {
        let d = match form {
            DisparityForm::Difference => (overall - v).abs(),
            DisparityForm::Ratio => ratio_term(overall, v),
        };
        worst = worst.max(d);
    }
    worst
}

pub struct Disparity {
    pub overall: f64,
    /// Defined subgroup values only.
    pub per_subgroup: BTreeMap<SubgroupKey, f64>,
    pub gamma_diff: f64,
    pub gamma_ratio: f64,
}

/// `None` when the criterion is undefined on the whole dataset.
pub fn disparity(
    preds: &[ClassLabel],
    truths: &[ClassLabel],
    groups: &[SubgroupKey],
    criterion: Criterion,
) -> Option<Disparity> {
    let overall = value(preds, truths, &|_| true, criterion)?;
    let keys: BTreeSet<&SubgroupKey> = groups.iter().collect();
    let per_subgroup: BTreeMap<SubgroupKey, f64> = keys
        .into_iter()
        .filter_map(|k| value(preds, truths, &|i| &groups[i] == k, criterion).map(|v| (k.clone(), v)))
        .collect();
    let values: Vec<f64> = per_subgroup.values().copied().collect();
    Some(Disparity {
        overall,
        gamma_diff: gamma(DisparityForm::Difference, overall, &values),
        gamma_ratio: gamma(DisparityForm::Ratio, overall, &values),
        per_subgroup,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptimum {
    pub feasible: bool,
    pub balanced_accuracy: f64,
    pub gamma: f64,
}

/// Every labeling reachable with per-subgroup thresholds: for each
/// subgroup, either all instances are favorable or exactly those scoring
/// above one of its distinct scores.
pub fn best_thresholds(
    scored: &[ScoredInstance],
    criterion: Criterion,
    form: DisparityForm,
    epsilon: f64,
) -> Option<SearchOptimum> {
    let keys: Vec<SubgroupKey> =
        scored.iter().map(|s| s.subgroup.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let options: Vec<Vec<f64>> = keys
        .iter()
        .map(|k| {
            let mut cuts = vec![f64::NEG_INFINITY];
            let mut distinct: Vec<f64> = scored.iter().filter(|s| &s.subgroup == k).map(|s| s.score).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            cuts.extend(distinct);
            cuts
        })
        .collect();
    let truths: Vec<ClassLabel> = scored.iter().map(|s| s.true_class).collect();
    let groups: Vec<SubgroupKey> = scored.iter().map(|s| s.subgroup.clone()).collect();
    let mut best: Option<SearchOptimum> = None;
    let mut pick = vec![0usize; keys.len()];
    loop {
        let preds: Vec<ClassLabel> = scored
            .iter()
            .map(|s| {
                let g = keys.iter().position(|k| k == &s.subgroup).unwrap();
                ClassLabel::from_favorable(s.score > options[g][pick[g]])
            })
            .collect();
        let d = disparity(&preds, &truths, &groups, criterion)?;
        let gamma = match form {
            DisparityForm::Difference => d.gamma_diff,
            DisparityForm::Ratio => d.gamma_ratio,
        };
        let cand =
            SearchOptimum { feasible: gamma < epsilon, balanced_accuracy: balanced_accuracy(&preds, &truths)?, gamma };
        best = Some(match best {
            None => cand,
            Some(b) => {
                let better = match (cand.feasible, b.feasible) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => cand.balanced_accuracy > b.balanced_accuracy,
                    (false, false) => {
                        cand.gamma < b.gamma || (cand.gamma == b.gamma && cand.balanced_accuracy > b.balanced_accuracy)
                    }
                };
                if better {
                    cand
                } else {
                    b
                }
            }
        });
        // odometer over the per-subgroup options
        let mut g = keys.len();
        loop {
            if g == 0 {
                return best;
            }
            g -= 1;
            pick[g] += 1;
            if pick[g] < options[g].len() {
                break;
            }
            pick[g] = 0;
        }
    }
}
