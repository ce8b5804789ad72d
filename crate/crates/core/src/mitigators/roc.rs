use super::{deprived_subgroup, two_subgroups, Evaluation, PairContext, PairState};
use crate::classifier::LogisticModel;
use crate::data::{ClassLabel, Dataset, Instance};
use crate::error::{Error, Result};
use crate::metrics::Confusion;

/// Critical-region half-widths 0.00, 0.01, ..., 0.50.
pub fn default_width_grid() -> Vec<f64> {
    (0..=50).map(|k| k as f64 / 100.0).collect()
}

#[inline]
fn decide(p: f64, width: f64, deprived: bool) -> ClassLabel {
    if width > 0.0 && (p - 0.5).abs() <= width {
        ClassLabel::from_favorable(deprived)
    } else {
        ClassLabel::from_favorable(p > 0.5)
    }
}

/// Picks the width minimising the pair's positive-rate gap on `pair_train`;
/// ties prefer higher balanced accuracy, then the smaller width.
pub fn roc_fit(plain: &LogisticModel, pair_train: &Dataset, widths: &[f64]) -> Result<PairContext> {
    if widths.is_empty() || widths.iter().any(|w| !(0.0..=0.5).contains(w)) {
        return Err(Error::InvalidInput("ROC widths must be non-empty and within [0, 0.5]".into()));
    }
    let pair = two_subgroups(pair_train)?;
    let deprived = deprived_subgroup(pair_train, &pair);
    let probs = plain.predict_proba_all(pair_train)?;
    let is_dep: Vec<bool> = pair_train.instances().iter().map(|i| i.sensitive == deprived).collect();
    let truths = pair_train.true_classes();

    let mut best: Option<(f64, f64, f64)> = None;
    for &w in widths {
        let (mut dep, mut fav, mut all) = (Confusion::default(), Confusion::default(), Confusion::default());
        for ((&p, &d), &t) in probs.iter().zip(&is_dep).zip(&truths) {
            let z = decide(p, w, d);
            all.record(z, t);
            if d {
                dep.record(z, t)
            } else {
                fav.record(z, t)
            }
        }
        let rate = |c: &Confusion| (c.tp + c.fp) as f64 / c.total() as f64;
        let gap = (rate(&dep) - rate(&fav)).abs();
        let acc = all.balanced_accuracy().unwrap_or(f64::NEG_INFINITY);
        let better = match best {
            None => true,
            Some((bg, ba, bw)) => gap < bg || (gap == bg && (acc > ba || (acc == ba && w < bw))),
        };
        if better {
            best = Some((gap, acc, w));
        }
    }
    let (gap, _, width) = best.expect("non-empty width grid");
    log::debug!("ROC {pair}: width {width:.2}, gap {gap:.4}");
    Ok(PairContext { pair, deprived, state: PairState::RejectOption { width } })
}

pub fn roc_eval(instance: &Instance, ctx: &PairContext, plain: &LogisticModel) -> Result<Evaluation> {
    let PairState::RejectOption { width } = ctx.state else {
        return Err(Error::InvalidInput("not a reject-option context".into()));
    };
    ctx.check_member(instance)?;
    let p = plain.predict_proba(instance)?;
    Ok(Evaluation { class: decide(p, width, instance.sensitive == ctx.deprived), proba: p })
}
