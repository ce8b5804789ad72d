//! Instances, subgroups and the pairwise sub-datasets built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class; `Favorable` is the positive class throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "+")]
    Favorable,
    #[serde(rename = "-")]
    Unfavorable,
}

impl ClassLabel {
    pub fn from_favorable(favorable: bool) -> Self {
        if favorable {
            ClassLabel::Favorable
        } else {
            ClassLabel::Unfavorable
        }
    }

    #[inline]
    pub fn is_favorable(self) -> bool {
        self == ClassLabel::Favorable
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Favorable => "+",
            ClassLabel::Unfavorable => "-",
        })
    }
}

/// One value per sensitive attribute, in schema order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubgroupKey(pub Vec<String>);

impl SubgroupKey {
    pub fn new<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SubgroupKey(values.into_iter().map(Into::into).collect())
    }

    pub fn values(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Serde adapter writing a map as a list of `[key, value]` entries, for
/// keys JSON cannot use as object keys (tuples) or cannot recover inside
/// tagged enums (integers).
pub mod key_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        map: &BTreeMap<K, V>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(deserializer: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let entries: Vec<(K, V)> = Vec::deserialize(deserializer)?;
        Ok(entries.into_iter().collect())
    }
}

impl fmt::Display for SubgroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// Stable row identifier, unique within the source dataset.
    pub id: usize,
    pub sensitive: SubgroupKey,
    pub features: Arc<[f64]>,
    pub true_class: ClassLabel,
    pub determined_class: Option<ClassLabel>,
}

impl Instance {
    pub fn new(id: usize, sensitive: SubgroupKey, features: Vec<f64>, true_class: ClassLabel) -> Self {
        Instance { id, sensitive, features: features.into(), true_class, determined_class: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveAttribute {
    pub name: String,
    pub values: Vec<String>,
}

impl SensitiveAttribute {
    pub fn new<S: Into<String>>(name: S, values: &[&str]) -> Self {
        SensitiveAttribute { name: name.into(), values: values.iter().map(|v| v.to_string()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    instances: Vec<Instance>,
    sensitive_schema: Vec<SensitiveAttribute>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Validates that every instance conforms to both schemas.
    pub fn new(
        instances: Vec<Instance>,
        sensitive_schema: Vec<SensitiveAttribute>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptySubset("dataset has no instances".into()));
        }
        let dim = feature_names.len();
        for inst in &instances {
            if inst.features.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: inst.features.len() });
            }
            if inst.sensitive.len() != sensitive_schema.len() {
                return Err(Error::InvalidInput(format!(
                    "instance {} has {} sensitive values, schema has {}",
                    inst.id,
                    inst.sensitive.len(),
                    sensitive_schema.len()
                )));
            }
            for (value, attr) in inst.sensitive.values().iter().zip(&sensitive_schema) {
                if !attr.values.contains(value) {
                    return Err(Error::InvalidInput(format!(
                        "instance {}: value {value:?} not in attribute {}",
                        inst.id, attr.name
                    )));
                }
            }
            if inst.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("instance {} has non-finite features", inst.id)));
            }
        }
        Ok(Dataset { instances, sensitive_schema, feature_names })
    }

    /// Builds a dataset from instances already known to satisfy the schema.
    fn derived(&self, instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptySubset("derived dataset has no instances".into()));
        }
        Ok(Dataset {
            instances,
            sensitive_schema: self.sensitive_schema.clone(),
            feature_names: self.feature_names.clone(),
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sensitive_schema(&self) -> &[SensitiveAttribute] {
        &self.sensitive_schema
    }

    pub fn true_classes(&self) -> Vec<ClassLabel> {
        self.instances.iter().map(|i| i.true_class).collect()
    }

    pub fn subgroup_keys(&self) -> Vec<SubgroupKey> {
        self.instances.iter().map(|i| i.sensitive.clone()).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.instances.iter().filter(|i| i.true_class.is_favorable()).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.positive_count();
        pos > 0 && pos < self.len()
    }

    /// Instances at the given positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            let inst = self
                .instances
                .get(i)
                .ok_or_else(|| Error::InvalidInput(format!("index {i} out of range for {} rows", self.len())))?;
            out.push(inst.clone());
        }
        self.derived(out)
    }

    pub fn filter<F: Fn(&Instance) -> bool>(&self, keep: F) -> Result<Self> {
        let out: Vec<Instance> = self.instances.iter().filter(|i| keep(i)).cloned().collect();
        self.derived(out)
    }

    /// Replaces every true class, e.g. with the determined classes of a mitigation.
    pub fn with_true_classes(&self, labels: &[ClassLabel]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidInput(format!("{} labels for {} instances", labels.len(), self.len())));
        }
        let out =
            self.instances.iter().zip(labels).map(|(inst, &c)| Instance { true_class: c, ..inst.clone() }).collect();
        self.derived(out)
    }

    /// Keeps a single sensitive attribute, so subgroups become that attribute's values.
    pub fn project_attribute(&self, attribute: &str) -> Result<Self> {
        let idx = self
            .sensitive_schema
            .iter()
            .position(|a| a.name == attribute)
            .ok_or_else(|| Error::InvalidInput(format!("no sensitive attribute {attribute:?}")))?;
        let instances = self
            .instances
            .iter()
            .map(|inst| Instance { sensitive: SubgroupKey(vec![inst.sensitive.0[idx].clone()]), ..inst.clone() })
            .collect();
        Ok(Dataset {
            instances,
            sensitive_schema: vec![self.sensitive_schema[idx].clone()],
            feature_names: self.feature_names.clone(),
        })
    }

    pub fn subgroup_sizes(&self) -> BTreeMap<SubgroupKey, usize> {
        let mut sizes = BTreeMap::new();
        for inst in &self.instances {
            *sizes.entry(inst.sensitive.clone()).or_insert(0) += 1;
        }
        sizes
    }
}

/// Unordered pair of distinct subgroups, stored with `first < second`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubgroupPair {
    first: SubgroupKey,
    second: SubgroupKey,
}

impl SubgroupPair {
    pub fn new(a: SubgroupKey, b: SubgroupKey) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(SubgroupPair { first: a, second: b }),
            std::cmp::Ordering::Greater => Ok(SubgroupPair { first: b, second: a }),
            std::cmp::Ordering::Equal => {
                Err(Error::InvalidInput(format!("a subgroup pair needs two distinct subgroups, got {a} twice")))
            }
        }
    }

    pub fn first(&self) -> &SubgroupKey {
        &self.first
    }

    pub fn second(&self) -> &SubgroupKey {
        &self.second
    }

    pub fn contains(&self, key: &SubgroupKey) -> bool {
        &self.first == key || &self.second == key
    }

    pub fn members(&self) -> [&SubgroupKey; 2] {
        [&self.first, &self.second]
    }
}

impl fmt::Display for SubgroupPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.second)
    }
}

/// Distinct subgroups present in the data, in lexicographic order.
pub fn enumerate_subgroups(dataset: &Dataset) -> Vec<SubgroupKey> {
    dataset.instances().iter().map(|i| &i.sensitive).collect::<BTreeSet<_>>().into_iter().cloned().collect()
}

/// All unordered pairs, lexicographic in (first, second).
pub fn enumerate_pairs(subgroups: &[SubgroupKey]) -> Result<Vec<SubgroupPair>> {
    let sorted: Vec<&SubgroupKey> = subgroups.iter().collect::<BTreeSet<_>>().into_iter().collect();
    if sorted.len() < 2 {
        return Err(Error::TooFewSubgroups { found: sorted.len() });
    }
    let mut pairs = Vec::with_capacity(sorted.len() * (sorted.len() - 1) / 2);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            pairs.push(SubgroupPair::new((*a).clone(), (*b).clone())?);
        }
    }
    Ok(pairs)
}

pub fn pair_subset(dataset: &Dataset, pair: &SubgroupPair) -> Result<Dataset> {
    dataset
        .filter(|i| pair.contains(&i.sensitive))
        .map_err(|_| Error::EmptySubset(format!("no instances in pair {pair}")))
}

/// The K = |S| - 1 pairs that involve `subgroup`.
pub fn pairs_for_subgroup(pairs: &[SubgroupPair], subgroup: &SubgroupKey) -> Result<Vec<SubgroupPair>> {
    let found: Vec<SubgroupPair> = pairs.iter().filter(|p| p.contains(subgroup)).cloned().collect();
    if found.is_empty() {
        return Err(Error::UnknownSubgroup(subgroup.to_string()));
    }
    Ok(found)
}
