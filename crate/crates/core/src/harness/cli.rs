//! `burden-audit` command line.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{
    oracle_check, prepare_data, rebuild_plot, rebuild_report, report_json, run_experiment,
    train_model, ExperimentConfig, GaProfile, PipelineError, Preset, OUT_DIR_ENV, PLOT_FILE,
    REPORT_FILE,
};
use crate::classifier::ModelFile;
use crate::dataset;
use crate::fairness::Metric;
use crate::synthgen;

#[derive(Debug, Parser)]
#[command(
    name = "burden-audit",
    version,
    about = "Counterfactual Burden and statistical parity audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Built-in synthetic dataset.
    #[arg(long, value_enum, conflicts_with_all = ["csv", "schema"])]
    preset: Option<Preset>,
    /// External CSV file (requires --schema).
    #[arg(long, requires = "schema")]
    csv: Option<PathBuf>,
    /// Schema file describing the CSV columns.
    #[arg(long, requires = "csv")]
    schema: Option<PathBuf>,
    /// Seed for data generation, sampling, training and the genetic search.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML config file layered over the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Genetic search size.
    #[arg(long, value_enum)]
    profile: Option<GaProfile>,
    /// Rows to sample after cleaning (capped at the row count).
    #[arg(long)]
    sample_size: Option<usize>,
    /// Sensitive column to audit.
    #[arg(long)]
    sensitive: Option<String>,
    /// Sensitive code treated as group 0 (numerator of every ratio).
    #[arg(long, allow_negative_numbers = true)]
    group0: Option<i64>,
    /// Sensitive code treated as group 1.
    #[arg(long, allow_negative_numbers = true)]
    group1: Option<i64>,
}

impl SourceArgs {
    fn resolve(&self) -> Result<ExperimentConfig, PipelineError> {
        let seed = self.seed.unwrap_or(0);
        let profile = self.profile.unwrap_or_default();
        let mut config = match (&self.preset, &self.csv, &self.schema) {
            (_, Some(csv), Some(schema)) => {
                ExperimentConfig::csv(csv.clone(), schema.clone(), seed, profile)
            }
            (preset, _, _) => ExperimentConfig::preset(preset.unwrap_or(Preset::Da), seed, profile),
        };
        if let Some(path) = &self.config {
            config = ExperimentConfig::overlay_file(config, path)?;
            // Explicit flags win over the file.
            if let Some(preset) = self.preset {
                config.data = super::DataSource::Preset { preset };
            }
            if let (Some(csv), Some(schema)) = (&self.csv, &self.schema) {
                config.data = super::DataSource::Csv {
                    csv: csv.clone(),
                    schema: schema.clone(),
                };
            }
            if let Some(profile) = self.profile {
                let ga_seed = config.ga.seed;
                config.ga = profile.config().with_seed(ga_seed);
            }
        }
        if let Some(seed) = self.seed {
            config.reseed(seed);
        }
        if self.sample_size.is_some() {
            config.sample_size = self.sample_size;
        }
        if self.sensitive.is_some() {
            config.sensitive_column = self.sensitive.clone();
        }
        if let Some(g) = self.group0 {
            config.groups.group0 = g;
        }
        if let Some(g) = self.group1 {
            config.groups.group1 = g;
        }
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset to CSV.
    Gen {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the classifier and save it.
    Train {
        #[command(flatten)]
        source: SourceArgs,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full audit: data, classifier, counterfactuals, fairness report, plot.
    Audit {
        #[command(flatten)]
        source: SourceArgs,
        /// Output directory (default from config, then $BURDEN_AUDIT_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rebuild report.json from an existing run directory instead of running.
        #[arg(long, conflicts_with_all = ["preset", "csv", "schema", "config"])]
        from_artifacts: Option<PathBuf>,
    },
    /// Re-render the scatter plot of a finished run.
    Plot {
        /// Run directory written by `audit`.
        #[arg(long)]
        run: PathBuf,
        /// SVG path (default: <run>/plot.svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare genetic-search distances with the closed-form projection.
    OracleCheck {
        #[command(flatten)]
        source: SourceArgs,
        /// Largest accepted ga/oracle distance ratio.
        #[arg(long, default_value_t = 1.10)]
        bound: f64,
    },
}

fn fmt_metric(m: &Metric) -> String {
    match m {
        Metric::Defined { value } => format!("{value:.4}"),
        Metric::Undefined { reason } => format!("undefined ({reason})"),
    }
}

fn execute(command: Command) -> Result<i32, PipelineError> {
    let emit_err = |e: std::io::Error| PipelineError::Stage {
        stage: "emit",
        message: e.to_string(),
    };
    match command {
        Command::Gen { preset, seed, out } => {
            let ds = synthgen::generate(&preset.spec(), seed);
            dataset::write_csv(&ds, &out).map_err(|e| PipelineError::Stage {
                stage: "emit",
                message: e.to_string(),
            })?;
            println!("wrote {} points to {}", ds.len(), out.display());
        }
        Command::Train { source, out } => {
            let config = source.resolve()?;
            let prepared = prepare_data(&config)?;
            let (model, accuracy) = train_model(&prepared.dataset, &config)?;
            ModelFile {
                feature_names: prepared.dataset.schema.legitimate_names(),
                model,
                train: config.train,
            }
            .save(&out)
            .map_err(|e| PipelineError::Stage {
                stage: "emit",
                message: e.to_string(),
            })?;
            println!("accuracy {accuracy:.4}; model written to {}", out.display());
        }
        Command::Audit {
            source,
            out,
            from_artifacts: Some(run),
        } => {
            let report = rebuild_report(&run)?;
            let target = out.unwrap_or_else(|| run.join(REPORT_FILE));
            fs::write(&target, report_json(&report)).map_err(emit_err)?;
            let _ = source;
            println!("rebuilt {}", target.display());
        }
        Command::Audit {
            source,
            out,
            from_artifacts: None,
        } => {
            let mut config = source.resolve()?;
            if let Some(dir) = out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)) {
                config.output_dir = dir;
            }
            let run = run_experiment(&config)?;
            let f = &run.audit.fairness;
            println!("accuracy            {:.4}", run.audit.accuracy);
            for g in &f.groups {
                println!(
                    "{}={:<4} AR {:<10} Burden {:<10} ({} invalid)",
                    f.sensitive_column,
                    g.value,
                    fmt_metric(&g.acceptance_rate),
                    fmt_metric(&g.burden),
                    g.invalid_counterfactuals
                );
            }
            println!("statistical parity  {}", fmt_metric(&f.statistical_parity));
            println!(
                "disparate impact    {}",
                f.disparate_impact
                    .map_or("undefined".into(), |d| d.to_string())
            );
            println!("burden ratio        {}", fmt_metric(&f.burden_ratio));
            for t in &run.timings {
                println!("time {:<20} {:.3}s", t.stage, t.seconds);
            }
            for notice in &run.notices {
                eprintln!("notice: {notice}");
            }
            println!("artifacts in {}", run.output_dir.display());
        }
        Command::Plot { run, out } => {
            let svg = rebuild_plot(&run)?;
            let target = out.unwrap_or_else(|| run.join(PLOT_FILE));
            fs::write(&target, svg).map_err(emit_err)?;
            println!("wrote {}", target.display());
        }
        Command::OracleCheck { source, bound } => {
            let config = source.resolve()?;
            let check = oracle_check(&config, bound)?;
            print!("{}", check.table());
            let max = check.max_ratio().map_or("-".into(), |m| format!("{m:.4}"));
            println!(
                "points {}  max ratio {max}  bound {bound}",
                check.rows.len()
            );
            if !check.within_bound() {
                eprintln!("oracle check failed: a search fell outside [oracle, {bound} x oracle]");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

/// Parse `args` and run. Returns the process exit code: 0 on success, 1 on a
/// pipeline failure, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
