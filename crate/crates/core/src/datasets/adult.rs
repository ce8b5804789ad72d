//! UCI Adult census income.
//!
//! Rows with any `?` are dropped, `fnlwgt` is discarded, race is cut into
//! `white` (raw value `White`) vs `non-white`, and the label is favorable
//! for income `>50K`. The remaining eleven columns are the features.

use std::fs::File;
use std::path::{Path, PathBuf};

use super::encode::{ColumnKind, TableEncoder};
use super::{GENDER, RACE};
use crate::data::{ClassLabel, Dataset, Instance, SensitiveAttribute, SubgroupKey};
use crate::error::{Error, Result};

const ADULT_COLUMNS: usize = 15;
const RACE_COL: usize = 8;
const SEX_COL: usize = 9;
const INCOME_COL: usize = 14;

pub const ADULT_FEATURE_COLUMNS: [(&str, usize); 11] = [
    ("age", 0),
    ("workclass", 1),
    ("education", 3),
    ("education-num", 4),
    ("marital-status", 5),
    ("occupation", 6),
    ("relationship", 7),
    ("capital-gain", 10),
    ("capital-loss", 11),
    ("hours-per-week", 12),
    ("native-country", 13),
];

const CATEGORICAL: [&str; 6] =
    ["workclass", "education", "marital-status", "occupation", "relationship", "native-country"];

struct RawRow {
    race: String,
    sex: String,
    favorable: bool,
    features: Vec<String>,
}

/// Source files: `path` itself, or `adult.data` and `adult.test` inside it.
fn source_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let files: Vec<PathBuf> =
            ["adult.data", "adult.test"].iter().map(|f| path.join(f)).filter(|p| p.is_file()).collect();
        if files.is_empty() {
            return Err(Error::data(path, "no adult.data or adult.test in directory"));
        }
        Ok(files)
    } else if path.is_file() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "Adult data not found")))
    }
}

fn read_rows(file: &Path, rows: &mut Vec<RawRow>) -> Result<()> {
    let handle = File::open(file).map_err(|e| Error::io(file, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'|'))
        .from_reader(handle);
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != ADULT_COLUMNS {
            return Err(Error::data(
                file,
                format!("record {}: {} fields, expected {ADULT_COLUMNS}", line + 1, record.len()),
            ));
        }
        if record.iter().any(|f| f == "?" || f.is_empty()) {
            continue;
        }
        let favorable = match record[INCOME_COL].trim_end_matches('.') {
            ">50K" => true,
            "<=50K" => false,
            other => return Err(Error::data(file, format!("record {}: income {other:?}", line + 1))),
        };
        rows.push(RawRow {
            race: record[RACE_COL].to_string(),
            sex: record[SEX_COL].to_string(),
            favorable,
            features: ADULT_FEATURE_COLUMNS.iter().map(|&(_, j)| record[j].to_string()).collect(),
        });
    }
    Ok(())
}

pub fn load_adult(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rows = Vec::new();
    for file in source_files(path)? {
        read_rows(&file, &mut rows)?;
    }
    if rows.is_empty() {
        return Err(Error::data(path, "no complete Adult rows"));
    }

    let spec: Vec<(&str, ColumnKind)> = ADULT_FEATURE_COLUMNS
        .iter()
        .map(|&(name, _)| {
            let kind = if CATEGORICAL.contains(&name) { ColumnKind::Categorical } else { ColumnKind::Numeric };
            (name, kind)
        })
        .collect();
    let raw: Vec<Vec<String>> = rows.iter().map(|r| r.features.clone()).collect();
    let encoder = TableEncoder::fit(&spec, &raw);

    let mut instances = Vec::with_capacity(rows.len());
    for (id, row) in rows.iter().enumerate() {
        let race = if row.race == "White" { "white" } else { "non-white" };
        let gender = match row.sex.as_str() {
            "Male" => "male",
            "Female" => "female",
            other => return Err(Error::data(path, format!("unknown sex {other:?}"))),
        };
        let features = encoder.encode(&row.features).map_err(|m| Error::data(path, m))?;
        instances.push(Instance::new(
            id,
            SubgroupKey::new([race, gender]),
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
