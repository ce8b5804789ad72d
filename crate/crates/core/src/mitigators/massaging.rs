use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{deprived_subgroup, two_subgroups, Evaluation, PairContext, PairState};
use crate::classifier::{fit, TrainConfig};
use crate::data::{ClassLabel, Dataset, Instance};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassagingState {
    /// Number of promotions, equal to the number of demotions.
    pub modifications: usize,
    pub promoted: Vec<usize>,
    pub demoted: Vec<usize>,
    /// Massaged class of every pair member, keyed by instance id.
    #[serde(with = "crate::data::key_map")]
    pub relabeled: BTreeMap<usize, ClassLabel>,
}

/// Relabels the pair's training data so both subgroups get the same
/// favorable rate (up to rounding), keeping the total positive count.
pub fn massaging_fit(pair_train: &Dataset, ranker: &TrainConfig) -> Result<(Dataset, PairContext)> {
    let pair = two_subgroups(pair_train)?;
    let deprived = deprived_subgroup(pair_train, &pair);
    let model = fit(pair_train, ranker)?;
    let scores = model.predict_proba_all(pair_train)?;

    let (mut n_dep, mut n_fav, mut dep_pos, mut fav_pos) = (0usize, 0usize, 0usize, 0usize);
    let mut promote = Vec::new();
    let mut demote = Vec::new();
    for (idx, inst) in pair_train.instances().iter().enumerate() {
        let pos = inst.true_class.is_favorable();
        if inst.sensitive == deprived {
            n_dep += 1;
            dep_pos += usize::from(pos);
            if !pos {
                promote.push(idx);
            }
        } else {
            n_fav += 1;
            fav_pos += usize::from(pos);
            if pos {
                demote.push(idx);
            }
        }
    }
    let ids = |i: usize| pair_train.instances()[i].id;
    // promote the most likely positives, demote the least likely
    promote.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(ids(a).cmp(&ids(b))));
    demote.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal).then(ids(a).cmp(&ids(b))));

    let raw = (fav_pos * n_dep) as f64 - (dep_pos * n_fav) as f64;
    let m = (raw / (n_dep + n_fav) as f64).round().max(0.0) as usize;
    let m = m.min(promote.len()).min(demote.len());

    let mut labels = pair_train.true_classes();
    for &i in &promote[..m] {
        labels[i] = ClassLabel::Favorable;
    }
    for &i in &demote[..m] {
        labels[i] = ClassLabel::Unfavorable;
    }
    let relabeled_data = pair_train.with_true_classes(&labels)?;
    let state = MassagingState {
        modifications: m,
        promoted: promote[..m].iter().map(|&i| ids(i)).collect(),
        demoted: demote[..m].iter().map(|&i| ids(i)).collect(),
        relabeled: pair_train.instances().iter().zip(&labels).map(|(inst, &l)| (inst.id, l)).collect(),
    };
    log::debug!("massaging {pair}: {m} swaps");
    Ok((relabeled_data, PairContext { pair, deprived, state: PairState::Massaging(state) }))
}

/// Massaged class of a training instance; the probability output is always 0.
pub fn massaging_eval(instance: &Instance, ctx: &PairContext) -> Result<Evaluation> {
    let PairState::Massaging(state) = &ctx.state else {
        return Err(Error::InvalidInput("not a massaging context".into()));
    };
    ctx.check_member(instance)?;
    let class = state.relabeled.get(&instance.id).copied().ok_or_else(|| {
        Error::InvalidInput(format!("instance {} was not part of the massaged training data", instance.id))
    })?;
    Ok(Evaluation { class, proba: 0.0 })
}
