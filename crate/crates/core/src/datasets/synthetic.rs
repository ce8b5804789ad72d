use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GENDER, RACE};
use crate::data::{ClassLabel, Dataset, Instance, SensitiveAttribute, SubgroupKey};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGroup {
    pub values: Vec<String>,
    pub size: usize,
    pub positive_rate: f64,
}

/// Subgroup sizes and positive rates; features are a class-dependent mean
/// shift (`±class_shift / (j + 1)` in dimension `j`) plus Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub attributes: Vec<String>,
    pub subgroups: Vec<SyntheticGroup>,
    #[serde(default = "default_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_one")]
    pub noise: f64,
    #[serde(default = "default_one")]
    pub class_shift: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    3
}

fn default_one() -> f64 {
    1.0
}

impl SyntheticSpec {
    /// Race x gender layout in the order (white, male), (white, female),
    /// (non-white, male), (non-white, female).
    pub fn race_gender(sizes: [usize; 4], rates: [f64; 4], seed: u64) -> Self {
        let keys = [["white", "male"], ["white", "female"], ["non-white", "male"], ["non-white", "female"]];
        SyntheticSpec {
            attributes: vec![RACE.into(), GENDER.into()],
            subgroups: keys
                .iter()
                .zip(sizes.iter().zip(rates))
                .map(|(k, (&size, positive_rate))| SyntheticGroup {
                    values: k.iter().map(|s| s.to_string()).collect(),
                    size,
                    positive_rate,
                })
                .collect(),
            feature_dim: default_dim(),
            noise: 1.0,
            class_shift: 1.0,
            seed,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.subgroups.iter().all(|g| g.size == 0) {
            return Err(Error::InvalidInput("every synthetic subgroup has size 0".into()));
        }
        for g in &self.subgroups {
            if !(0.0..=1.0).contains(&g.positive_rate) {
                return Err(Error::InvalidInput(format!("positive rate {} outside [0, 1]", g.positive_rate)));
            }
            if g.values.len() != self.attributes.len() {
                return Err(Error::InvalidInput(format!(
                    "subgroup {:?} has {} values for {} attributes",
                    g.values,
                    g.values.len(),
                    self.attributes.len()
                )));
            }
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidInput("noise scale must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut instances = Vec::new();
    for group in &spec.subgroups {
        let key = SubgroupKey(group.values.clone());
        for _ in 0..group.size {
            let favorable = rng.random::<f64>() < group.positive_rate;
            let sign = if favorable { 1.0 } else { -1.0 };
            let features = (0..spec.feature_dim)
                .map(|j| {
                    let z: f64 = rng.sample(StandardNormal);
                    sign * spec.class_shift / (j + 1) as f64 + spec.noise * z
                })
                .collect();
            instances.push(Instance::new(
                instances.len(),
                key.clone(),
                features,
                ClassLabel::from_favorable(favorable),
            ));
        }
    }
    let schema = spec
        .attributes
        .iter()
        .enumerate()
        .map(|(a, name)| {
            let values: BTreeSet<&str> = spec.subgroups.iter().map(|g| g.values[a].as_str()).collect();
            SensitiveAttribute { name: name.clone(), values: values.into_iter().map(String::from).collect() }
        })
        .collect();
    Dataset::new(instances, schema, (0..spec.feature_dim).map(|j| format!("x{j}")).collect())
}
