//! Equalized odds / equal opportunity post-processing by randomized
//! prediction mixing.
//!
//! Each subgroup of a pair gets two rates: the probability of keeping a
//! favorable plain prediction and the probability of flipping an
//! unfavorable one. Rates live on a regular grid; the pair's expected
//! balanced accuracy is maximised subject to the criterion gap staying
//! within a tolerance.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{deprived_subgroup, keyed_uniform, two_subgroups, Evaluation, PairContext, PairState};
use crate::classifier::LogisticModel;
use crate::data::{ClassLabel, Dataset, Instance, SubgroupKey};
use crate::error::{Error, Result};

pub const EO_GRID_STEPS: usize = 100;
pub const EO_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EoCriterion {
    /// Equal TPR and FPR.
    Odds,
    /// Equal TPR only.
    Opportunity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingRates {
    /// P(output favorable | plain prediction favorable).
    pub keep_positive: f64,
    /// P(output favorable | plain prediction unfavorable).
    pub flip_negative: f64,
}

impl MixingRates {
    pub const IDENTITY: MixingRates = MixingRates { keep_positive: 1.0, flip_negative: 0.0 };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EoState {
    pub criterion: EoCriterion,
    #[serde(with = "crate::data::key_map")]
    pub rates: BTreeMap<SubgroupKey, MixingRates>,
}

/// Plain-prediction confusion rates of one subgroup.
#[derive(Clone, Copy, Debug)]
struct GroupRates {
    tpr: f64,
    fpr: f64,
    positives: f64,
    negatives: f64,
}

fn group_rates(plain: &LogisticModel, ds: &Dataset, key: &SubgroupKey) -> Result<GroupRates> {
    let (mut tp, mut fp, mut p, mut n) = (0usize, 0usize, 0usize, 0usize);
    for inst in ds.instances().iter().filter(|i| &i.sensitive == key) {
        let yhat = plain.predict(inst, 0.5)?.is_favorable();
        if inst.true_class.is_favorable() {
            p += 1;
            tp += usize::from(yhat);
        } else {
            n += 1;
            fp += usize::from(yhat);
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(GroupRates { tpr: ratio(tp, p), fpr: ratio(fp, n), positives: p as f64, negatives: n as f64 })
}

/// One grid point of one subgroup after mixing.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    rates: MixingRates,
    tpr: f64,
    fpr: f64,
    /// This subgroup's share of the pair's balanced accuracy.
    contrib: f64,
    /// Distance from the identity mixing.
    deviation: f64,
}

fn candidates(g: GroupRates, total_pos: f64, total_neg: f64, steps: usize) -> Vec<Candidate> {
    let mut out = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        for j in 0..=steps {
            let b = j as f64 / steps as f64;
            let tpr = a * g.tpr + b * (1.0 - g.tpr);
            let fpr = a * g.fpr + b * (1.0 - g.fpr);
            let mut contrib = 0.0;
            if total_pos > 0.0 {
                contrib += g.positives * tpr / (2.0 * total_pos);
            }
            if total_neg > 0.0 {
                contrib += g.negatives * (1.0 - fpr) / (2.0 * total_neg);
            }
            out.push(Candidate {
                rates: MixingRates { keep_positive: a, flip_negative: b },
                tpr,
                fpr,
                contrib,
                deviation: (1.0 - a) + b,
            });
        }
    }
    out
}

pub fn eo_fit(plain: &LogisticModel, pair_train: &Dataset, criterion: EoCriterion) -> Result<PairContext> {
    eo_fit_with(plain, pair_train, criterion, EO_GRID_STEPS, EO_TOLERANCE)
}

/// Grid search over both subgroups' mixing rates.
///
/// Maximises expected pair balanced accuracy subject to the TPR gap (and,
/// for odds, the FPR gap) being at most `tolerance`. Ties go to the pair
/// closest to identity mixing.
pub fn eo_fit_with(
    plain: &LogisticModel,
    pair_train: &Dataset,
    criterion: EoCriterion,
    steps: usize,
    tolerance: f64,
) -> Result<PairContext> {
    if steps == 0 || !(tolerance > 0.0) {
        return Err(Error::InvalidInput("EO grid needs steps > 0 and a positive tolerance".into()));
    }
    let pair = two_subgroups(pair_train)?;
    let deprived = deprived_subgroup(pair_train, &pair);
    let ga = group_rates(plain, pair_train, pair.first())?;
    let gb = group_rates(plain, pair_train, pair.second())?;
    for (g, key) in [(ga, pair.first()), (gb, pair.second())] {
        if g.positives == 0.0 || g.negatives == 0.0 {
            return Err(Error::SingleClass(format!("subgroup {key} lacks a class in {pair}")));
        }
    }
    let total_pos = ga.positives + gb.positives;
    let total_neg = ga.negatives + gb.negatives;
    let ca = candidates(ga, total_pos, total_neg, steps);
    let mut cb = candidates(gb, total_pos, total_neg, steps);
    // within a cell the first feasible entry is the best partner
    cb.sort_by(|x, y| y.contrib.total_cmp(&x.contrib).then(x.deviation.total_cmp(&y.deviation)));

    let odds = criterion == EoCriterion::Odds;
    let cell = |v: f64| (v / tolerance).floor() as i64;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, c) in cb.iter().enumerate() {
        let key = (cell(c.tpr), if odds { cell(c.fpr) } else { 0 });
        buckets.entry(key).or_default().push(k);
    }
    let slack = tolerance + 1e-12;
    let feasible =
        |a: &Candidate, b: &Candidate| (a.tpr - b.tpr).abs() <= slack && (!odds || (a.fpr - b.fpr).abs() <= slack);

    let mut best: Option<(f64, f64, MixingRates, MixingRates)> = None;
    let fpr_cells: &[i64] = if odds { &[-1, 0, 1] } else { &[0] };
    for a in &ca {
        let (ta, fa) = (cell(a.tpr), if odds { cell(a.fpr) } else { 0 });
        for dt in -1..=1 {
            for &df in fpr_cells {
                let Some(list) = buckets.get(&(ta + dt, fa + df)) else { continue };
                let Some(b) = list.iter().map(|&k| &cb[k]).find(|b| feasible(a, b)) else {
                    continue;
                };
                let objective = a.contrib + b.contrib;
                let deviation = a.deviation + b.deviation;
                let better = match best {
                    None => true,
                    Some((bo, bd, ..)) => objective > bo || (objective == bo && deviation < bd),
                };
                if better {
                    best = Some((objective, deviation, a.rates, b.rates));
                }
            }
        }
    }
    // both subgroups at all-favorable is always feasible, so `best` is set
    let (objective, _, ra, rb) = best.expect("constant mixing is always feasible");
    log::debug!("EO {pair}: expected balanced accuracy {objective:.4}");
    let rates = BTreeMap::from([(pair.first().clone(), ra), (pair.second().clone(), rb)]);
    Ok(PairContext { pair, deprived, state: PairState::EqualizedOdds(EoState { criterion, rates }) })
}

/// Randomized output; the draw is keyed on the seed, the pair and the
/// instance id, so repeated calls agree. The probability output is the
/// plain probability pushed through the mixing, `a * p + b * (1 - p)`, so
/// identity mixing returns the plain probability.
pub fn eo_eval(instance: &Instance, ctx: &PairContext, plain: &LogisticModel, seed: u64) -> Result<Evaluation> {
    let PairState::EqualizedOdds(state) = &ctx.state else {
        return Err(Error::InvalidInput("not an equalized-odds context".into()));
    };
    ctx.check_member(instance)?;
    let rates = state.rates.get(&instance.sensitive).copied().unwrap_or(MixingRates::IDENTITY);
    let p = plain.predict_proba(instance)?;
    let q = if p > 0.5 { rates.keep_positive } else { rates.flip_negative };
    let u = keyed_uniform(seed, &ctx.pair, instance.id);
    let proba = rates.keep_positive * p + rates.flip_negative * (1.0 - p);
    Ok(Evaluation { class: ClassLabel::from_favorable(u < q), proba })
}
