//! Cross-validated experiments, epsilon sweeps and report files.

mod cache;
mod config;
mod experiment;
mod report;

pub use cache::{dataset_fingerprint, ModelCache};
pub use config::{
    load_dataset, resolve_data_dir, Approach, DatasetSource, ExperimentConfig, ReportFormat, DATA_DIR_ENV,
    DEFAULT_EPSILON, DEFAULT_FOLDS, DEFAULT_SWEEP_STEP,
};
pub use experiment::{
    epsilon_grid, run_experiment, sweep_epsilon, FoldResult, RunResult, Runner, SeriesPoint, Stat, Sweep, TrainSummary,
    REPORT_SCHEMA_VERSION,
};
pub use report::{
    emit_report, emit_sweep, read_json_report, render_csv, render_json, render_series_csv, series_path, Report,
    CSV_COLUMNS, SERIES_COLUMNS,
};
