//! Adult and COMPAS loaders, a seeded synthetic generator and k-fold splits.

mod adult;
mod compas;
mod encode;
mod synthetic;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adult::{load_adult, ADULT_FEATURE_COLUMNS};
pub use compas::{load_compas, COMPAS_FEATURE_COLUMNS};
pub use synthetic::{generate_synthetic, SyntheticGroup, SyntheticSpec};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Sensitive attribute names shared by the real datasets.
pub const RACE: &str = "race";
pub const GENDER: &str = "gender";

#[derive(Clone, Debug)]
pub struct FoldSplit {
    pub train: Dataset,
    pub test: Dataset,
    pub fold_index: usize,
    pub seed: u64,
}

/// Uniformly shuffled (not stratified) k-fold partition.
///
/// The first `n % k` folds get one extra test instance. Both sides keep the
/// original row order.
pub fn kfold_split(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    let n = dataset.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds {n} instances")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut fold_of = vec![0usize; n];
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        for &i in &order[start..start + size] {
            fold_of[i] = f;
        }
        start += size;
    }

    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
            Ok(FoldSplit { train: dataset.select(&train)?, test: dataset.select(&test)?, fold_index: f, seed })
        })
        .collect()
}
