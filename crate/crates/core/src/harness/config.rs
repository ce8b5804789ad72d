use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::Dataset;
use crate::datasets::{generate_synthetic, load_adult, load_compas, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::{Criterion, DisparityForm, MetricSpec};
use crate::mitigators::MitigatorKind;
use crate::ovo::OvoConfig;

/// Overrides the directory holding the Adult and COMPAS files.
pub const DATA_DIR_ENV: &str = "OVO_DATA_DIR";
pub const DEFAULT_EPSILON: f64 = 0.03;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_SWEEP_STEP: f64 = 0.03;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetSource {
    Adult,
    Compas,
    /// TOML generator spec.
    Synthetic(PathBuf),
}

impl DatasetSource {
    /// Short name used in reports; synthetic sources keep their path.
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Adult => f.write_str("adult"),
            DatasetSource::Compas => f.write_str("compas"),
            DatasetSource::Synthetic(p) => write!(f, "synthetic:{}", p.display()),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("synthetic:") {
            if path.is_empty() {
                return Err(Error::Config("synthetic dataset needs a spec path".into()));
            }
            return Ok(DatasetSource::Synthetic(PathBuf::from(path)));
        }
        match s.to_ascii_lowercase().as_str() {
            "adult" => Ok(DatasetSource::Adult),
            "compas" => Ok(DatasetSource::Compas),
            _ => Err(Error::Config(format!("unknown dataset {s:?} (expected adult, compas or synthetic:<path>)"))),
        }
    }
}

impl Serialize for DatasetSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DatasetSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Plain,
    BaselineSingleAttribute,
    Ovo,
}

impl Approach {
    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Plain => "plain",
            Approach::BaselineSingleAttribute => "baseline_single_attribute",
            Approach::Ovo => "ovo",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "plain" => Ok(Approach::Plain),
            "baseline_single_attribute" | "baseline" => Ok(Approach::BaselineSingleAttribute),
            "ovo" => Ok(Approach::Ovo),
            _ => Err(Error::Config(format!("unknown approach {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub approach: Approach,
    /// Required unless the approach is `plain`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MitigatorKind>,
    pub criterion: Criterion,
    #[serde(default = "default_form")]
    pub form: DisparityForm,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    /// Classifier, mitigator and search settings. Seeds and the search
    /// target are overwritten from the fields above.
    #[serde(default)]
    pub model: OvoConfig,
}

fn default_form() -> DisparityForm {
    DisparityForm::Difference
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, approach: Approach, criterion: Criterion) -> Self {
        ExperimentConfig {
            dataset,
            approach,
            method: None,
            criterion,
            form: default_form(),
            epsilon: DEFAULT_EPSILON,
            folds: DEFAULT_FOLDS,
            seed: 0,
            output: None,
            format: ReportFormat::default(),
            model: OvoConfig::default(),
        }
    }

    pub fn with_method(mut self, method: MitigatorKind) -> Self {
        self.method = Some(method);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn metric(&self) -> MetricSpec {
        MetricSpec::new(self.criterion, self.form)
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        match (self.approach, self.method) {
            (Approach::Plain, _) => {}
            (_, None) => {
                return Err(Error::Config(format!("approach {} needs a method", self.approach)));
            }
            (_, Some(method)) if !method.supports(self.criterion) => {
                return Err(Error::IncompatibleMethod {
                    method: method.to_string(),
                    criterion: self.criterion.to_string(),
                });
            }
            _ => {}
        }
        self.model.search.validate()
    }

    /// Settings actually used for one fold: the experiment seed drives the
    /// randomized draws and coordinate-ascent restarts.
    pub fn ovo_config(&self) -> OvoConfig {
        let mut cfg = self.model.clone();
        cfg.seed = self.seed;
        cfg.search.seed = self.seed;
        cfg.search.epsilon = self.epsilon;
        cfg.search.metric = self.metric();
        cfg
    }
}

/// `explicit`, then `$OVO_DATA_DIR`, then `./data`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(dir) = explicit {
        return dir.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from("data"),
    }
}

pub fn load_dataset(source: &DatasetSource, data_dir: &Path) -> Result<Dataset> {
    match source {
        DatasetSource::Adult => load_adult(data_dir),
        DatasetSource::Compas => load_compas(data_dir),
        DatasetSource::Synthetic(path) => {
            let spec = SyntheticSpec::from_file(path).map_err(|e| match e {
                Error::Config(msg) => Error::data(path, msg),
                other => other,
            })?;
            generate_synthetic(&spec)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_source_round_trip() {
        for s in ["adult", "compas", "synthetic:specs/a.toml"] {
            assert_eq!(s.parse::<DatasetSource>().unwrap().to_string(), s);
        }
        assert!("synthetic:".parse::<DatasetSource>().is_err());
        assert!("german".parse::<DatasetSource>().is_err());
    }

    #[test]
    fn toml_config_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            dataset = "compas"
            approach = "ovo"
            method = "MS"
            criterion = "demographic_parity"

            [model.plain]
            l2_strength = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.dataset, DatasetSource::Compas);
        assert_eq!(cfg.method, Some(MitigatorKind::Massaging));
        assert_eq!(cfg.folds, 5);
        assert_eq!(cfg.epsilon, 0.03);
        assert_eq!(cfg.form, DisparityForm::Difference);
        assert_eq!(cfg.model.plain.l2_strength, 0.5);
        assert!(cfg.model.plain.balance_classes);
        cfg.validate().unwrap();
        assert!(ExperimentConfig::from_toml_str("dataset = \"adult\"\nbogus = 1").is_err());
    }

    #[test]
    fn validation() {
        let base = ExperimentConfig::new(DatasetSource::Adult, Approach::Ovo, Criterion::EqualizedOdds);
        assert!(matches!(base.validate(), Err(Error::Config(_))));
        let ms = base.clone().with_method(MitigatorKind::Massaging);
        assert!(matches!(ms.validate(), Err(Error::IncompatibleMethod { .. })));
        base.clone().with_method(MitigatorKind::EqualizedOdds).validate().unwrap();
        base.clone().with_method(MitigatorKind::FairLr).validate().unwrap();
        let plain = ExperimentConfig::new(DatasetSource::Adult, Approach::Plain, Criterion::EqualizedOdds);
        plain.validate().unwrap();
        for (eps, folds) in [(0.0, 5), (1.5, 5), (0.03, 1)] {
            let bad = ExperimentConfig { epsilon: eps, folds, ..plain.clone() };
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn explicit_data_dir_wins() {
        assert_eq!(resolve_data_dir(Some(Path::new("/x"))), PathBuf::from("/x"));
    }
}
