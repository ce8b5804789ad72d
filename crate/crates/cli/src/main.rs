use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ovo_core::harness::{
    emit_report, emit_sweep, epsilon_grid, render_csv, render_json, render_series_csv, Approach, DatasetSource,
    ExperimentConfig, ModelCache, Report, ReportFormat, RunResult, Runner, DEFAULT_SWEEP_STEP,
};
use ovo_core::metrics::{Criterion, DisparityForm};
use ovo_core::mitigators::MitigatorKind;
use ovo_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Cross-validated fairness experiments with one-vs-one subgroup mitigation.
#[derive(Debug, Parser)]
#[command(name = "ovo", version)]
struct Cli {
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one cross-validated experiment.
    Run(ExperimentArgs),
    /// Repeat an experiment over a range of disparity limits.
    Sweep {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// First limit; defaults to the experiment's epsilon.
        #[arg(long)]
        eps_start: Option<f64>,
        #[arg(long, default_value_t = 0.99)]
        eps_end: f64,
        #[arg(long, default_value_t = DEFAULT_SWEEP_STEP)]
        eps_step: f64,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// adult, compas or synthetic:<spec.toml>
    #[arg(long)]
    dataset: Option<DatasetSource>,
    /// plain, baseline_single_attribute or ovo
    #[arg(long)]
    approach: Option<Approach>,
    /// MS, FAIR_LR, ROC, EO_ODDS or EO_OPP
    #[arg(long)]
    method: Option<MitigatorKind>,
    /// demographic_parity, equalized_odds or equal_opportunity
    #[arg(long)]
    criterion: Option<Criterion>,
    /// difference or ratio
    #[arg(long)]
    form: Option<DisparityForm>,
    /// Disparity limit; searched thresholds keep training gamma below it (default 0.03).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Cross-validation folds (default 5).
    #[arg(long)]
    folds: Option<usize>,
    /// Seeds the fold split and the randomized mitigators (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Directory with the Adult and COMPAS files (default $OVO_DATA_DIR, then ./data).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Reuse fitted per-fold models stored here.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::IncompatibleMethod { .. } => Failure::Usage(e.to_string()),
            e => Failure::Core(e),
        }
    }
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path).map_err(|e| match e {
                Error::Io { .. } => Failure::Core(e),
                e => Failure::Usage(e.to_string()),
            })?,
            None => {
                let missing = |flag: &str| Failure::Usage(format!("--{flag} is required without --config"));
                let dataset = self.dataset.clone().ok_or_else(|| missing("dataset"))?;
                let approach = self.approach.ok_or_else(|| missing("approach"))?;
                let criterion = self.criterion.ok_or_else(|| missing("criterion"))?;
                ExperimentConfig::new(dataset, approach, criterion)
            }
        };
        if let Some(v) = &self.dataset {
            cfg.dataset = v.clone();
        }
        if let Some(v) = self.approach {
            cfg.approach = v;
        }
        if self.method.is_some() {
            cfg.method = self.method;
        }
        if let Some(v) = self.criterion {
            cfg.criterion = v;
        }
        if let Some(v) = self.form {
            cfg.form = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn runner(&self) -> Runner {
        Runner { data_dir: self.data_dir.clone(), cache: self.cache_dir.as_ref().map(ModelCache::new) }
    }
}

fn summarize(results: &[RunResult]) {
    for r in results {
        let c = &r.config;
        let method = c.method.map(|m| format!(" {m}")).unwrap_or_default();
        let mut line = format!(
            "{} {}{method} eps={} {} {}: gamma {:.4} +/- {:.4}, balanced accuracy {:.4} +/- {:.4}",
            c.dataset,
            r.label(),
            c.epsilon,
            c.criterion,
            c.form,
            r.gamma.mean,
            r.gamma.std,
            r.balanced_accuracy.mean,
            r.balanced_accuracy.std,
        );
        if !r.infeasible_folds.is_empty() {
            line.push_str(&format!(", infeasible folds {:?}", r.infeasible_folds));
        }
        eprintln!("{line}");
    }
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Core(Error::Io { path: PathBuf::from("<stdout>"), source: e }))
}

fn emit(results: &[RunResult], cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => emit_report(results, cfg.format, path)?,
        None => write_stdout(&match cfg.format {
            ReportFormat::Csv => render_csv(results)?,
            ReportFormat::Json => render_json(&Report::new(results.to_vec()))?,
        })?,
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let results = match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let results = args.runner().run(&cfg)?;
            emit(&results, &cfg, cfg.output.as_deref())?;
            results
        }
        Command::Sweep { experiment, eps_start, eps_end, eps_step } => {
            let cfg = experiment.config()?;
            let grid = epsilon_grid(eps_start.unwrap_or(cfg.epsilon), eps_end, eps_step)?;
            let sweep = experiment.runner().sweep(&cfg, &grid)?;
            match cfg.output.as_deref() {
                Some(path) => emit_sweep(&sweep.results, &sweep.series, cfg.format, path)?,
                None => match cfg.format {
                    ReportFormat::Csv => write_stdout(&render_series_csv(&sweep.series, cfg.folds)?)?,
                    ReportFormat::Json => {
                        let report = Report { series: sweep.series.clone(), ..Report::new(sweep.results.clone()) };
                        write_stdout(&render_json(&report)?)?
                    }
                },
            }
            sweep.results
        }
    };
    summarize(&results);
    Ok(infeasible_only(&results))
}

/// Searched runs exist and none of their folds met the limit.
fn infeasible_only(results: &[RunResult]) -> bool {
    let mut searched = results.iter().filter(|r| r.config.approach == Approach::Ovo).peekable();
    searched.peek().is_some() && searched.all(RunResult::all_infeasible)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match execute(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: no fold met the disparity limit");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
