use super::{deprived_subgroup, two_subgroups, Evaluation, PairContext, PairState};
use crate::classifier::{fit_fair_regularized, TrainConfig};
use crate::data::{Dataset, Instance};
use crate::error::{Error, Result};

/// Logistic regression penalising the squared gap between the two
/// subgroups' mean predicted probabilities.
pub fn fair_lr_fit(pair_train: &Dataset, config: &TrainConfig, fairness_weight: f64) -> Result<PairContext> {
    let pair = two_subgroups(pair_train)?;
    let deprived = deprived_subgroup(pair_train, &pair);
    let model = fit_fair_regularized(pair_train, config, fairness_weight)?;
    Ok(PairContext { pair, deprived, state: PairState::FairLr { model } })
}

pub fn fair_lr_eval(instance: &Instance, ctx: &PairContext) -> Result<Evaluation> {
    let PairState::FairLr { model } = &ctx.state else {
        return Err(Error::InvalidInput("not a fairness-regularised context".into()));
    };
    ctx.check_member(instance)?;
    let p = model.predict_proba(instance)?;
    Ok(Evaluation { class: crate::data::ClassLabel::from_favorable(p > 0.5), proba: p })
}
