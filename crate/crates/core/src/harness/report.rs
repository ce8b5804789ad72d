use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ReportFormat;
use super::experiment::{RunResult, SeriesPoint, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 11] = [
    "dataset",
    "approach",
    "method",
    "criterion",
    "form",
    "epsilon",
    "fold",
    "gamma",
    "balanced_accuracy",
    "feasible",
    "schema_version",
];

pub const SERIES_COLUMNS: [&str; 9] = [
    "approach",
    "epsilon",
    "balanced_accuracy",
    "gamma",
    "train_balanced_accuracy",
    "train_gamma",
    "feasible_folds",
    "folds",
    "schema_version",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub results: Vec<RunResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<SeriesPoint>,
}

impl Report {
    pub fn new(results: Vec<RunResult>) -> Self {
        Report { schema_version: REPORT_SCHEMA_VERSION, results, series: Vec::new() }
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per fold of every result, in result order.
pub fn render_csv(results: &[RunResult]) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(CSV_COLUMNS)?;
    for r in results {
        let c = &r.config;
        let method = c.method.map(|m| m.to_string()).unwrap_or_default();
        for f in &r.folds {
            let feasible = f.feasible().map(|b| b.to_string()).unwrap_or_default();
            w.write_record([
                c.dataset.name(),
                r.label(),
                method.clone(),
                c.criterion.to_string(),
                c.form.to_string(),
                c.epsilon.to_string(),
                f.fold.to_string(),
                f.gamma(c.metric()).to_string(),
                f.balanced_accuracy.to_string(),
                feasible,
                REPORT_SCHEMA_VERSION.to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn render_json(report: &Report) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Series table of a sweep: fold means per approach and limit.
pub fn render_series_csv(series: &[SeriesPoint], folds: usize) -> Result<String> {
    let mut w = csv_writer();
    w.write_record(SERIES_COLUMNS)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in series {
        w.write_record([
            p.label.clone(),
            p.epsilon.to_string(),
            p.balanced_accuracy.to_string(),
            p.gamma.to_string(),
            opt(p.train_balanced_accuracy),
            opt(p.train_gamma),
            p.feasible_folds.to_string(),
            folds.to_string(),
            REPORT_SCHEMA_VERSION.to_string(),
        ])?;
    }
    finish(w)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_report(results: &[RunResult], format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(results)?,
        ReportFormat::Json => render_json(&Report::new(results.to_vec()))?,
    };
    write(path, &text)
}

/// Writes the per-fold report to `path` and, for CSV, the series table
/// next to it with a `.series.csv` suffix. JSON keeps both in one document.
pub fn emit_sweep(results: &[RunResult], series: &[SeriesPoint], format: ReportFormat, path: &Path) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            write(path, &render_csv(results)?)?;
            let folds = results.first().map_or(0, |r| r.config.folds);
            write(&series_path(path), &render_series_csv(series, folds)?)
        }
        ReportFormat::Json => {
            let report = Report { series: series.to_vec(), ..Report::new(results.to_vec()) };
            write(path, &render_json(&report)?)
        }
    }
}

pub fn series_path(path: &Path) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.series.csv"))
}

pub fn read_json_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: Report = serde_json::from_str(&text)?;
    if report.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::data(path, format!("unsupported schema_version {}", report.schema_version)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_synthetic, SyntheticSpec};
    use crate::harness::{Approach, DatasetSource, ExperimentConfig, Runner};
    use crate::metrics::Criterion;
    use crate::mitigators::MitigatorKind;

    fn results() -> Vec<RunResult> {
        let ds = generate_synthetic(&SyntheticSpec::race_gender([90, 70, 60, 50], [0.6, 0.4, 0.35, 0.2], 9)).unwrap();
        let cfg = ExperimentConfig {
            epsilon: 0.1,
            ..ExperimentConfig::new(DatasetSource::Compas, Approach::Ovo, Criterion::DemographicParity)
                .with_method(MitigatorKind::RejectOption)
        };
        Runner::default().run_on(&ds, &cfg).unwrap()
    }

    #[test]
    fn csv_has_one_row_per_fold() {
        let r = results();
        let text = render_csv(&r).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5 + 1);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(lines[1].starts_with("compas,ovo,ROC,demographic_parity,difference,0.1,0,"));
        assert_eq!(render_csv(&r).unwrap(), text);
    }

    #[test]
    fn json_round_trip() {
        let r = results();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/report.json");
        emit_report(&r, ReportFormat::Json, &path).unwrap();
        let back = read_json_report(&path).unwrap();
        assert_eq!(back.results, r);
        assert!(back.results[0].notes.iter().any(|n| n.contains("recidivism")));
    }

    #[test]
    fn sweep_csv_writes_series_next_to_report() {
        let r = results();
        let series: Vec<SeriesPoint> = r.iter().map(SeriesPoint::from).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        emit_sweep(&r, &series, ReportFormat::Csv, &path).unwrap();
        let table = fs::read_to_string(dir.path().join("sweep.series.csv")).unwrap();
        assert_eq!(table.lines().count(), 2);
        assert!(table.lines().nth(1).unwrap().starts_with("ovo,0.1,"));
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_report(&[], ReportFormat::Csv, &blocker.join("r.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
