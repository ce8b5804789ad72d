//! Constrained per-subgroup threshold search.
//!
//! Each subgroup's candidate thresholds are midpoints between its distinct
//! scores plus two sentinels (everything favorable, nothing favorable).
//! Confusion counts per candidate are precomputed, so evaluating a full
//! threshold assignment costs O(|S|).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::score::{ScoredInstance, ThresholdMap};
use crate::data::SubgroupKey;
use crate::error::{Error, Result};
use crate::metrics::{gamma, Confusion, Criterion, DisparityForm, MetricSpec};

/// Sentinel used when a subgroup's lowest score is 0, so that every
/// instance can still be sent to `+`.
pub const BELOW_ZERO_SENTINEL: f64 = -0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Exhaustive when the candidate product fits `exhaustive_limit`.
    Auto,
    Exhaustive,
    CoordinateAscent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub epsilon: f64,
    pub metric: MetricSpec,
    pub grid_quantiles: usize,
    pub strategy: SearchStrategy,
    pub restarts: usize,
    pub seed: u64,
    pub exhaustive_limit: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            epsilon: 0.03,
            metric: MetricSpec::new(Criterion::DemographicParity, DisparityForm::Difference),
            grid_quantiles: 50,
            strategy: SearchStrategy::Auto,
            restarts: 5,
            seed: 0,
            exhaustive_limit: 10_000_000,
        }
    }
}

impl SearchConfig {
    pub fn new(epsilon: f64, metric: MetricSpec) -> Self {
        SearchConfig { epsilon, metric, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.grid_quantiles < 2 {
            return Err(Error::Config(format!("grid_quantiles must be at least 2, got {}", self.grid_quantiles)));
        }
        Ok(())
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub thresholds: ThresholdMap,
    pub epsilon: f64,
    /// Training balanced accuracy of the returned thresholds.
    pub balanced_accuracy: f64,
    /// Training disparity of the returned thresholds under the search metric.
    pub gamma: f64,
    /// Whether `gamma < epsilon`; otherwise the thresholds minimise gamma.
    pub feasible: bool,
    pub evaluated: u64,
    pub strategy: SearchStrategy,
}

/// Ascending candidate thresholds for one subgroup's scores.
pub fn candidate_thresholds(scores: &[f64], grid_quantiles: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for (i, &s) in sorted.iter().enumerate() {
        match distinct.last_mut() {
            Some((v, c)) if *v == s => *c = i + 1,
            _ => distinct.push((s, i + 1)),
        }
    }
    let Some(&(lowest, _)) = distinct.first() else {
        return vec![BELOW_ZERO_SENTINEL, 1.0];
    };
    let n = sorted.len() as f64;
    // (midpoint, fraction of instances at or below it)
    let mids: Vec<(f64, f64)> = distinct.windows(2).map(|w| ((w[0].0 + w[1].0) / 2.0, w[0].1 as f64 / n)).collect();
    let mut out = vec![if lowest > 0.0 { 0.0 } else { BELOW_ZERO_SENTINEL }];
    if mids.len() <= grid_quantiles {
        out.extend(mids.iter().map(|m| m.0));
    } else {
        let mut last = None;
        for q in 1..=grid_quantiles {
            let target = q as f64 / (grid_quantiles + 1) as f64;
            let right = mids.partition_point(|m| m.1 < target).min(mids.len() - 1);
            let pick =
                if right > 0 && target - mids[right - 1].1 <= mids[right].1 - target { right - 1 } else { right };
            if last != Some(pick) {
                out.push(mids[pick].0);
                last = Some(pick);
            }
        }
    }
    if out.last() != Some(&1.0) {
        out.push(1.0);
    }
    out
}

struct GroupTable {
    key: SubgroupKey,
    thetas: Vec<f64>,
    tp: Vec<u64>,
    fp: Vec<u64>,
    value: Vec<Option<f64>>,
}

struct Problem {
    groups: Vec<GroupTable>,
    positives: u64,
    negatives: u64,
    metric: MetricSpec,
}

#[derive(Clone, Copy, Debug)]
struct Eval {
    gamma: f64,
    accuracy: f64,
}

impl Problem {
    fn build(scored: &[ScoredInstance], metric: MetricSpec, grid_quantiles: usize) -> Result<Self> {
        if scored.is_empty() {
            return Err(Error::EmptySubset("threshold search on no instances".into()));
        }
        let mut by_group: BTreeMap<&SubgroupKey, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for s in scored {
            let entry = by_group.entry(&s.subgroup).or_default();
            if s.true_class.is_favorable() {
                entry.0.push(s.score);
            } else {
                entry.1.push(s.score);
            }
        }
        let (mut positives, mut negatives) = (0u64, 0u64);
        let mut groups = Vec::with_capacity(by_group.len());
        for (key, (mut pos, mut neg)) in by_group {
            pos.sort_by(f64::total_cmp);
            neg.sort_by(f64::total_cmp);
            let all: Vec<f64> = pos.iter().chain(&neg).copied().collect();
            let thetas = candidate_thresholds(&all, grid_quantiles);
            let above = |v: &[f64], t: f64| (v.len() - v.partition_point(|&x| x <= t)) as u64;
            let tp: Vec<u64> = thetas.iter().map(|&t| above(&pos, t)).collect();
            let fp: Vec<u64> = thetas.iter().map(|&t| above(&neg, t)).collect();
            let (p, n) = (pos.len() as u64, neg.len() as u64);
            let value: Vec<Option<f64>> =
                tp.iter().zip(&fp).map(|(&a, &b)| Confusion::from_counts(p, n, a, b).value(metric.criterion)).collect();
            if value.iter().all(Option::is_none) {
                log::warn!("{} undefined for subgroup {key}; excluded from disparity", metric.criterion);
            }
            positives += p;
            negatives += n;
            groups.push(GroupTable { key: key.clone(), thetas, tp, fp, value });
        }
        if positives == 0 || negatives == 0 {
            return Err(Error::SingleClass("threshold search needs both truth classes".into()));
        }
        Ok(Problem { groups, positives, negatives, metric })
    }

    fn combinations(&self) -> u128 {
        self.groups.iter().map(|g| g.thetas.len() as u128).product()
    }

    #[inline]
    fn evaluate(&self, idx: &[usize]) -> Eval {
        let (mut tp, mut fp) = (0u64, 0u64);
        for (g, &k) in self.groups.iter().zip(idx) {
            tp += g.tp[k];
            fp += g.fp[k];
        }
        let overall = Confusion::from_counts(self.positives, self.negatives, tp, fp);
        // defined because both classes are present
        let ov = overall.value(self.metric.criterion).unwrap_or(0.0);
        let values = self.groups.iter().zip(idx).filter_map(|(g, &k)| g.value[k]);
        Eval { gamma: gamma(self.metric.form, ov, values), accuracy: overall.balanced_accuracy().unwrap_or(0.0) }
    }

    fn thresholds(&self, idx: &[usize]) -> ThresholdMap {
        ThresholdMap(self.groups.iter().zip(idx).map(|(g, &k)| (g.key.clone(), g.thetas[k])).collect())
    }
}

/// Best-so-far for one epsilon.
#[derive(Clone)]
struct Tracker {
    epsilon: f64,
    best: Option<(Eval, Vec<usize>)>,
}

impl Tracker {
    fn new(epsilon: f64) -> Self {
        Tracker { epsilon, best: None }
    }

    /// Feasible beats infeasible; feasible compares accuracy, infeasible
    /// compares gamma then accuracy. Ties keep the incumbent.
    #[inline]
    fn beats(&self, a: Eval, b: Eval) -> bool {
        match (a.gamma < self.epsilon, b.gamma < self.epsilon) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => a.accuracy > b.accuracy,
            (false, false) => a.gamma < b.gamma || (a.gamma == b.gamma && a.accuracy > b.accuracy),
        }
    }

    #[inline]
    fn offer(&mut self, e: Eval, idx: &[usize]) {
        let take = match &self.best {
            None => true,
            Some((b, _)) => self.beats(e, *b),
        };
        if take {
            self.best = Some((e, idx.to_vec()));
        }
    }

    fn outcome(&self, problem: &Problem, evaluated: u64, strategy: SearchStrategy) -> SearchOutcome {
        let (e, idx) = self.best.as_ref().expect("at least one assignment evaluated");
        SearchOutcome {
            thresholds: problem.thresholds(idx),
            epsilon: self.epsilon,
            balanced_accuracy: e.accuracy,
            gamma: e.gamma,
            feasible: e.gamma < self.epsilon,
            evaluated,
            strategy,
        }
    }
}

fn exhaustive(problem: &Problem, trackers: &mut [Tracker]) -> u64 {
    let dims: Vec<usize> = problem.groups.iter().map(|g| g.thetas.len()).collect();
    let mut idx = vec![0usize; dims.len()];
    let mut count = 0u64;
    loop {
        let e = problem.evaluate(&idx);
        count += 1;
        for t in trackers.iter_mut() {
            t.offer(e, &idx);
        }
        // odometer; the last subgroup turns fastest
        let mut d = dims.len();
        loop {
            if d == 0 {
                return count;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn coordinate_ascent(problem: &Problem, tracker: &mut Tracker, restarts: usize, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0u64;
    for r in 0..=restarts {
        let mut idx: Vec<usize> = problem
            .groups
            .iter()
            .map(|g| {
                if r == 0 {
                    // shared threshold 0.5
                    g.thetas.partition_point(|&t| t < 0.5).min(g.thetas.len() - 1)
                } else {
                    rng.random_range(0..g.thetas.len())
                }
            })
            .collect();
        let mut local = Tracker::new(tracker.epsilon);
        local.offer(problem.evaluate(&idx), &idx);
        count += 1;
        loop {
            let mut moved = false;
            for gi in 0..idx.len() {
                let current = idx[gi];
                let mut best_k = current;
                for k in 0..problem.groups[gi].thetas.len() {
                    if k == current {
                        continue;
                    }
                    idx[gi] = k;
                    let e = problem.evaluate(&idx);
                    count += 1;
                    let incumbent = local.best.as_ref().map(|b| b.0).expect("seeded");
                    if local.beats(e, incumbent) {
                        local.best = Some((e, idx.clone()));
                        best_k = k;
                    }
                }
                idx[gi] = best_k;
                moved |= best_k != current;
            }
            if !moved {
                break;
            }
        }
        let (e, best_idx) = local.best.expect("seeded");
        tracker.offer(e, &best_idx);
    }
    count
}

fn resolve(problem: &Problem, config: &SearchConfig) -> SearchStrategy {
    match config.strategy {
        SearchStrategy::Auto if problem.combinations() <= u128::from(config.exhaustive_limit) => {
            SearchStrategy::Exhaustive
        }
        SearchStrategy::Auto => SearchStrategy::CoordinateAscent,
        s => s,
    }
}

/// Thresholds maximising training balanced accuracy subject to `gamma < epsilon`.
pub fn search_thresholds(scored: &[ScoredInstance], config: &SearchConfig) -> Result<SearchOutcome> {
    let mut out = search_thresholds_multi(scored, config, &[config.epsilon])?;
    Ok(out.pop().expect("one epsilon"))
}

/// One search per epsilon over the same candidate grid. The exhaustive
/// strategy shares a single pass between all epsilons.
pub fn search_thresholds_multi(
    scored: &[ScoredInstance],
    config: &SearchConfig,
    epsilons: &[f64],
) -> Result<Vec<SearchOutcome>> {
    config.validate()?;
    for &e in epsilons {
        check_epsilon(e)?;
    }
    let problem = Problem::build(scored, config.metric, config.grid_quantiles)?;
    let strategy = resolve(&problem, config);
    let mut trackers: Vec<Tracker> = epsilons.iter().map(|&e| Tracker::new(e)).collect();
    match strategy {
        SearchStrategy::Exhaustive => {
            let n = exhaustive(&problem, &mut trackers);
            Ok(trackers.iter().map(|t| t.outcome(&problem, n, strategy)).collect())
        }
        _ => Ok(trackers
            .iter_mut()
            .map(|t| {
                let n = coordinate_ascent(&problem, t, config.restarts, config.seed);
                t.outcome(&problem, n, strategy)
            })
            .collect()),
    }
}
