//! Benchmark fixtures.

use ovo_core::datasets::{generate_synthetic, SyntheticSpec};
use ovo_core::mitigators::MitigatorKind;
use ovo_core::ovo::{fit_ovo, OvoConfig};
use ovo_core::{Dataset, ScoredInstance};

/// Four-subgroup synthetic data with `scale` times the base group sizes.
pub fn biased_dataset(scale: usize, seed: u64) -> Dataset {
    let sizes = [400, 300, 200, 100].map(|n| n * scale);
    generate_synthetic(&SyntheticSpec::race_gender(sizes, [0.6, 0.4, 0.35, 0.15], seed)).expect("valid synthetic spec")
}

/// Training scores of a fitted one-vs-one pipeline.
pub fn scored_training(train: &Dataset, method: MitigatorKind) -> Vec<ScoredInstance> {
    fit_ovo(train, method, &OvoConfig::default()).expect("fits").train_scores
}
