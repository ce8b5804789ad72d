//! Brute-force oracles, generators and invariant checks shared by the
//! property suite and the acceptance run.

#![allow(dead_code)]

pub mod invariants;
pub mod oracle;

use ovo_core::data::{ClassLabel, Dataset, Instance, SensitiveAttribute, SubgroupKey};
use ovo_core::metrics::{Criterion, DisparityForm};
use ovo_core::ovo::ScoredInstance;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

/// Seeded runner so every invocation checks the same cases.
pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn group_key(g: usize) -> SubgroupKey {
    SubgroupKey::new([format!("g{g}")])
}

pub fn label(favorable: bool) -> ClassLabel {
    ClassLabel::from_favorable(favorable)
}

/// One sensitive attribute `g` with values `g0..g{groups-1}`.
pub fn one_attribute(rows: &[(usize, Vec<f64>, bool)], groups: usize, dim: usize) -> Dataset {
    let values: Vec<String> = (0..groups).map(|g| format!("g{g}")).collect();
    let refs: Vec<&str> = values.iter().map(String::as_str).collect();
    let instances =
        rows.iter().enumerate().map(|(id, (g, x, c))| Instance::new(id, group_key(*g), x.clone(), label(*c))).collect();
    Dataset::new(instances, vec![SensitiveAttribute::new("g", &refs)], (0..dim).map(|j| format!("x{j}")).collect())
        .unwrap()
}

/// Two attributes `a` (values a0..) and `b` (values b0..), no features.
pub fn two_attributes(rows: &[(usize, usize, bool)], card: (usize, usize)) -> Dataset {
    let a: Vec<String> = (0..card.0).map(|v| format!("a{v}")).collect();
    let b: Vec<String> = (0..card.1).map(|v| format!("b{v}")).collect();
    let instances = rows
        .iter()
        .enumerate()
        .map(|(id, (x, y, c))| Instance::new(id, SubgroupKey::new([a[*x].clone(), b[*y].clone()]), vec![], label(*c)))
        .collect();
    fn refs(v: &[String]) -> Vec<&str> {
        v.iter().map(String::as_str).collect()
    }
    Dataset::new(
        instances,
        vec![SensitiveAttribute::new("a", &refs(&a)), SensitiveAttribute::new("b", &refs(&b))],
        vec![],
    )
    .unwrap()
}

pub fn criterion() -> impl Strategy<Value = Criterion> {
    prop::sample::select(Criterion::ALL.to_vec())
}

pub fn form() -> impl Strategy<Value = DisparityForm> {
    prop::sample::select(vec![DisparityForm::Difference, DisparityForm::Ratio])
}

/// Predictions, truths and group indices of up to `max_n` instances.
pub fn labeled(max_n: usize, max_groups: usize) -> impl Strategy<Value = (Vec<bool>, Vec<bool>, Vec<usize>)> {
    (1..=max_n, 1..=max_groups).prop_flat_map(|(n, s)| {
        (
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(0..s, n),
        )
    })
}

/// Score on a coarse grid (ties are common) or anywhere in [0, 1].
pub fn score_value() -> impl Strategy<Value = f64> {
    prop_oneof![(0u32..=8).prop_map(|k| k as f64 / 8.0), 0.0..=1.0f64]
}

/// Scored training rows with both truth classes present.
pub fn scored(max_n: usize, max_groups: usize) -> impl Strategy<Value = Vec<ScoredInstance>> {
    (2..=max_n, 1..=max_groups)
        .prop_flat_map(|(n, s)| prop::collection::vec((0..s, score_value(), any::<bool>()), n))
        .prop_filter("needs both truth classes", |rows| rows.iter().any(|r| r.2) && rows.iter().any(|r| !r.2))
        .prop_map(|rows| rows.into_iter().map(|(g, t, c)| scored_row(g, t, c)).collect())
}

pub fn scored_row(g: usize, score: f64, favorable: bool) -> ScoredInstance {
    ScoredInstance { subgroup: group_key(g), vote_ratio: 0.0, mean_proba: 0.0, score, true_class: label(favorable) }
}

/// Two-group rows with features, guaranteed to hold both classes in both
/// groups.
pub fn pair_rows(max_extra: usize) -> impl Strategy<Value = Vec<(usize, Vec<f64>, bool)>> {
    prop::collection::vec((0..2usize, -3.0..3.0f64, -3.0..3.0f64, any::<bool>()), 0..=max_extra).prop_map(|extra| {
        let mut rows = vec![
            (0, vec![1.0, 0.5], true),
            (0, vec![-1.0, 0.0], false),
            (1, vec![0.5, -0.5], true),
            (1, vec![-0.5, 1.0], false),
        ];
        rows.extend(extra.into_iter().map(|(g, a, b, c)| (g, vec![a, b], c)));
        rows
    })
}
