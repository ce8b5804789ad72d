use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ColumnKind {
    Numeric,
    Categorical,
}

/// One-hot encoder for categoricals, pass-through for numerics.
///
/// Category levels are the sorted distinct values seen across all rows, so
/// encoding does not depend on row order.
pub(crate) struct TableEncoder {
    columns: Vec<(String, ColumnKind, Vec<String>)>,
}

impl TableEncoder {
    pub fn fit(spec: &[(&str, ColumnKind)], rows: &[Vec<String>]) -> Self {
        let columns = spec
            .iter()
            .enumerate()
            .map(|(j, &(name, kind))| {
                let levels = match kind {
                    ColumnKind::Numeric => Vec::new(),
                    ColumnKind::Categorical => rows
                        .iter()
                        .map(|r| r[j].as_str())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .map(String::from)
                        .collect(),
                };
                (name.to_string(), kind, levels)
            })
            .collect();
        TableEncoder { columns }
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (name, kind, levels) in &self.columns {
            match kind {
                ColumnKind::Numeric => names.push(name.clone()),
                ColumnKind::Categorical => {
                    names.extend(levels.iter().map(|l| format!("{name}={l}")));
                }
            }
        }
        names
    }

    /// Encodes a row; numeric columns must already parse.
    pub fn encode(&self, row: &[String]) -> Result<Vec<f64>, String> {
        let mut out = Vec::new();
        for ((name, kind, levels), raw) in self.columns.iter().zip(row) {
            match kind {
                ColumnKind::Numeric => {
                    out.push(raw.parse::<f64>().map_err(|_| format!("column {name}: {raw:?} is not numeric"))?)
                }
                ColumnKind::Categorical => {
                    let hit = levels.binary_search(raw).map_err(|_| format!("column {name}: unseen level {raw:?}"))?;
                    out.extend((0..levels.len()).map(|k| if k == hit { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(out)
    }
}
