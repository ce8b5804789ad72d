//! ProPublica COMPAS two-year recidivism.
//!
//! Applies the original analysis filters, drops rows missing any kept
//! column, and treats "no recidivism within two years" as favorable. Race
//! is cut into `white` (raw value `Caucasian`) vs `non-white`.

use std::fs::File;
use std::path::{Path, PathBuf};

use super::encode::{ColumnKind, TableEncoder};
use super::{GENDER, RACE};
use crate::data::{ClassLabel, Dataset, Instance, SensitiveAttribute, SubgroupKey};
use crate::error::{Error, Result};

const FILE_NAME: &str = "compas-scores-two-years.csv";

pub const COMPAS_FEATURE_COLUMNS: [&str; 8] = [
    "age",
    "age_cat",
    "juv_fel_count",
    "juv_misd_count",
    "juv_other_count",
    "priors_count",
    "c_charge_degree",
    "c_charge_desc",
];

const CATEGORICAL: [&str; 3] = ["age_cat", "c_charge_degree", "c_charge_desc"];

fn source_file(path: &Path) -> Result<PathBuf> {
    let file = if path.is_dir() { path.join(FILE_NAME) } else { path.to_path_buf() };
    if !file.is_file() {
        return Err(Error::io(&file, std::io::Error::new(std::io::ErrorKind::NotFound, "COMPAS data not found")));
    }
    Ok(file)
}

struct Columns {
    days_b_screening_arrest: usize,
    is_recid: usize,
    score_text: usize,
    sex: usize,
    race: usize,
    two_year_recid: usize,
    charge_degree: usize,
    features: Vec<usize>,
}

impl Columns {
    fn locate(file: &Path, headers: &csv::StringRecord) -> Result<Self> {
        // the file repeats some headers (decile_score, priors_count); the first wins
        let find = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::data(file, format!("missing column {name:?}")))
        };
        Ok(Columns {
            days_b_screening_arrest: find("days_b_screening_arrest")?,
            is_recid: find("is_recid")?,
            score_text: find("score_text")?,
            sex: find("sex")?,
            race: find("race")?,
            two_year_recid: find("two_year_recid")?,
            charge_degree: find("c_charge_degree")?,
            features: COMPAS_FEATURE_COLUMNS.iter().map(|name| find(name)).collect::<Result<_>>()?,
        })
    }
}

pub fn load_compas(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = source_file(path.as_ref())?;
    let handle = File::open(&file).map_err(|e| Error::io(&file, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(handle);
    let cols = Columns::locate(&file, reader.headers()?)?;

    struct Row {
        white: bool,
        gender: &'static str,
        favorable: bool,
        features: Vec<String>,
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |j: usize| record.get(j).unwrap_or("").trim();

        let Ok(days) = field(cols.days_b_screening_arrest).parse::<f64>() else {
            continue;
        };
        if !(-30.0..=30.0).contains(&days)
            || field(cols.is_recid) == "-1"
            || field(cols.is_recid).is_empty()
            || field(cols.score_text) == "N/A"
            || field(cols.score_text).is_empty()
        {
            continue;
        }
        let kept = [cols.sex, cols.race, cols.two_year_recid];
        if kept.iter().chain(&cols.features).any(|&j| field(j).is_empty()) {
            continue;
        }
        if field(cols.charge_degree) == "O" {
            continue;
        }
        let gender = match field(cols.sex) {
            "Male" => "male",
            "Female" => "female",
            other => return Err(Error::data(&file, format!("row {}: sex {other:?}", line + 2))),
        };
        let favorable = match field(cols.two_year_recid) {
            "0" => true,
            "1" => false,
            other => return Err(Error::data(&file, format!("row {}: two_year_recid {other:?}", line + 2))),
        };
        rows.push(Row {
            white: field(cols.race) == "Caucasian",
            gender,
            favorable,
            features: cols.features.iter().map(|&j| field(j).to_string()).collect(),
        });
    }
    if rows.is_empty() {
        return Err(Error::data(&file, "no COMPAS rows survive filtering"));
    }

    let spec: Vec<(&str, ColumnKind)> = COMPAS_FEATURE_COLUMNS
        .iter()
        .map(|&name| {
            let kind = if CATEGORICAL.contains(&name) { ColumnKind::Categorical } else { ColumnKind::Numeric };
            (name, kind)
        })
        .collect();
    let raw: Vec<Vec<String>> = rows.iter().map(|r| r.features.clone()).collect();
    let encoder = TableEncoder::fit(&spec, &raw);
    let mut instances = Vec::with_capacity(rows.len());
    for (id, row) in rows.iter().enumerate() {
        let features = encoder.encode(&row.features).map_err(|m| Error::data(&file, m))?;
        instances.push(Instance::new(
            id,
            SubgroupKey::new([if row.white { "white" } else { "non-white" }, row.gender]),
            features,
            ClassLabel::from_favorable(row.favorable),
        ));
    }
    Dataset::new(
        instances,
        vec![
            SensitiveAttribute::new(RACE, &["non-white", "white"]),
            SensitiveAttribute::new(GENDER, &["female", "male"]),
        ],
        encoder.feature_names(),
    )
}
