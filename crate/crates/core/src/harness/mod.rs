//! Experiment orchestration: data → classifier → counterfactuals → fairness report,
//! with every intermediate persisted so reports and plots can be rebuilt offline.

pub mod cli;
mod config;
pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{DataSource, ExperimentConfig, GaProfile, Preset, OUT_DIR_ENV};

use crate::classifier::{self, LinearModel, ModelFile};
use crate::counterfactual::{self, oracle_projection, Counterfactual, DistanceMetric};
use crate::dataset::{self, Dataset, SchemaFile};
use crate::fairness::{self, FairnessReport, ReportConfig};
use crate::synthgen;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

pub const DATASET_FILE: &str = "dataset.csv";
pub const SCHEMA_FILE: &str = "schema.toml";
pub const MODEL_FILE: &str = "model.json";
pub const COUNTERFACTUAL_FILE: &str = "counterfactuals.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const PLOT_FILE: &str = "plot.svg";
pub const TIMINGS_FILE: &str = "timings.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub rows_loaded: usize,
    pub rows_removed_by_cleaning: usize,
    pub rows_used: usize,
    pub feature_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub data_seed: u64,
    pub train_seed: u64,
    pub ga_seed: u64,
    pub distance_metric: DistanceMetric,
    pub population_size: usize,
    pub generations: usize,
    pub config_digest: String,
}

/// The audit result written to `report.json`. Contains nothing time-dependent,
/// so identical configs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub dataset: DatasetSummary,
    pub accuracy: f64,
    pub fairness: FairnessReport,
    pub provenance: Provenance,
}

/// Inputs to the run that cannot be recovered from the other artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub dataset: PathBuf,
    pub model: PathBuf,
    pub counterfactuals: PathBuf,
    pub report: PathBuf,
    /// `None` when the data is not two-dimensional.
    pub plot: Option<PathBuf>,
    pub timings_file: PathBuf,
    pub timings: Vec<StageTiming>,
    pub notices: Vec<String>,
    pub audit: AuditReport,
}

/// Loaded, cleaned and sampled data plus counts for the summary.
pub struct PreparedData {
    pub dataset: Dataset,
    pub summary: DatasetSummary,
}

pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData, PipelineError> {
    let (loaded, source) = match &config.data {
        DataSource::Preset { preset } => (
            synthgen::generate(&preset.spec(), config.seed),
            config.data.describe(),
        ),
        DataSource::Csv { csv, schema } => {
            let schema_file = SchemaFile::load(schema).map_err(stage("load"))?;
            let ds = dataset::load_csv(csv, &schema_file.schema(), schema_file.favorable_label)
                .map_err(stage("load"))?;
            (ds, config.data.describe())
        }
    };
    let loaded = match &config.sensitive_column {
        Some(name) => loaded.with_audited(name).map_err(stage("load"))?,
        None => loaded,
    };
    let rows_loaded = loaded.len();
    let cleaned = dataset::clean(&loaded);
    let ds = match config.sample_size {
        Some(n) => {
            let n = n.min(cleaned.dataset.len());
            dataset::sample(&cleaned.dataset, n, config.seed).map_err(stage("sample"))?
        }
        None => cleaned.dataset,
    };
    let summary = DatasetSummary {
        source,
        rows_loaded,
        rows_removed_by_cleaning: cleaned.removed,
        rows_used: ds.len(),
        feature_count: ds.schema.feature_count(),
    };
    Ok(PreparedData {
        dataset: ds,
        summary,
    })
}

pub fn train_model(
    ds: &Dataset,
    config: &ExperimentConfig,
) -> Result<(LinearModel, f64), PipelineError> {
    let split = dataset::split(ds);
    let model =
        classifier::train(&split.features, &split.labels, &config.train).map_err(stage("train"))?;
    let accuracy =
        classifier::accuracy(&model, &split.features, &split.labels).map_err(stage("train"))?;
    Ok((model, accuracy))
}

fn assemble_report(
    config: &ExperimentConfig,
    summary: DatasetSummary,
    ds: &Dataset,
    model: &LinearModel,
    counterfactuals: &[Counterfactual],
) -> Result<AuditReport, PipelineError> {
    let split = dataset::split(ds);
    let accuracy =
        classifier::accuracy(model, &split.features, &split.labels).map_err(stage("report"))?;
    let report_config = ReportConfig {
        groups: config.groups,
        rule: config.disparate_impact_rule,
    };
    let fairness = fairness::build_report(model, ds, counterfactuals, &report_config)
        .map_err(stage("report"))?;
    Ok(AuditReport {
        dataset: summary,
        accuracy,
        fairness,
        provenance: Provenance {
            data_seed: config.seed,
            train_seed: config.train.seed,
            ga_seed: config.ga.seed,
            distance_metric: config.ga.distance_metric,
            population_size: config.ga.population_size,
            generations: config.ga.generations,
            config_digest: config.digest(),
        },
    })
}

/// Files written during a run; removed again if a later stage fails.
struct Written {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
}

impl Written {
    fn write(&mut self, path: PathBuf, contents: &[u8]) -> Result<PathBuf, PipelineError> {
        fs::write(&path, contents).map_err(stage("emit"))?;
        self.files.push(path.clone());
        Ok(path)
    }

    fn track(&mut self, path: PathBuf) -> PathBuf {
        self.files.push(path.clone());
        path
    }

    fn rollback(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(dir) = self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Run the whole audit and write its artifacts under `config.output_dir`.
///
/// Any failure removes the files this run had already written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts, PipelineError> {
    config.ga.validate().map_err(stage("config"))?;
    let dir = config.output_dir.clone();
    let created_dir = (!dir.exists()).then(|| dir.clone());
    fs::create_dir_all(&dir).map_err(stage("emit"))?;
    let mut written = Written {
        files: Vec::new(),
        created_dir,
    };
    match run_stages(config, &dir, &mut written) {
        Ok(artifacts) => Ok(artifacts),
        Err(e) => {
            written.rollback();
            Err(e)
        }
    }
}

fn run_stages(
    config: &ExperimentConfig,
    dir: &Path,
    written: &mut Written,
) -> Result<RunArtifacts, PipelineError> {
    let mut timings = Vec::new();
    let mut notices = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming {
            stage: name.to_string(),
            seconds: clock.elapsed().as_secs_f64(),
        });
        clock = Instant::now();
    };

    let prepared = prepare_data(config)?;
    let ds = prepared.dataset;
    lap("data", &mut timings);

    let (model, _) = train_model(&ds, config)?;
    lap("train", &mut timings);

    // Fairness metrics need only predictions; timed apart from the search.
    let preds = fairness::predictions(&model, &ds).map_err(stage("report"))?;
    let _ = fairness::statistical_parity(&preds, &dataset::split(&ds).sensitive, config.groups);
    lap("statistical_parity", &mut timings);

    let counterfactuals = counterfactual::generate_all(&model, &ds, 0, &config.ga)
        .map_err(stage("counterfactuals"))?;
    let invalid = counterfactuals.iter().filter(|c| !c.valid).count();
    if invalid > 0 {
        notices.push(format!(
            "{invalid} of {} counterfactual searches found no opposite-class point",
            counterfactuals.len()
        ));
    }
    lap("counterfactuals", &mut timings);

    let audit = assemble_report(
        config,
        prepared.summary.clone(),
        &ds,
        &model,
        &counterfactuals,
    )?;
    lap("report", &mut timings);

    let dataset_path = written.track(dir.join(DATASET_FILE));
    dataset::write_csv(&ds, &dataset_path).map_err(stage("emit"))?;
    let schema = SchemaFile {
        favorable_label: ds.favorable_label_raw,
        columns: ds.schema.columns.clone(),
    };
    written.write(dir.join(SCHEMA_FILE), schema.to_toml().as_bytes())?;
    let model_path = written.track(dir.join(MODEL_FILE));
    ModelFile {
        feature_names: ds.schema.legitimate_names(),
        model: model.clone(),
        train: config.train,
    }
    .save(&model_path)
    .map_err(stage("emit"))?;
    let cf_path = written.track(dir.join(COUNTERFACTUAL_FILE));
    counterfactual::write_dump(&cf_path, &counterfactuals).map_err(stage("emit"))?;
    let manifest = RunManifest {
        config: config.clone(),
        dataset: prepared.summary,
    };
    written.write(dir.join(MANIFEST_FILE), &to_json(&manifest))?;
    let report_path = written.write(dir.join(REPORT_FILE), &to_json(&audit))?;

    let plot = match plot::render_svg(&ds, &model, &counterfactuals) {
        Ok(svg) => Some(written.write(dir.join(PLOT_FILE), svg.as_bytes())?),
        Err(skip) => {
            notices.push(skip.to_string());
            None
        }
    };
    lap("emit", &mut timings);

    let timings_path = written.write(dir.join(TIMINGS_FILE), &to_json(&timings))?;

    Ok(RunArtifacts {
        output_dir: dir.to_path_buf(),
        dataset: dataset_path,
        model: model_path,
        counterfactuals: cf_path,
        report: report_path,
        plot,
        timings_file: timings_path,
        timings,
        notices,
        audit,
    })
}

/// Everything persisted by a finished run.
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub dataset: Dataset,
    pub model: ModelFile,
    pub counterfactuals: Vec<Counterfactual>,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun, PipelineError> {
    let manifest_text = fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(stage("load"))?;
    let manifest: RunManifest = serde_json::from_str(&manifest_text).map_err(stage("load"))?;
    let schema = SchemaFile::load(&dir.join(SCHEMA_FILE)).map_err(stage("load"))?;
    let mut ds = dataset::load_csv(
        &dir.join(DATASET_FILE),
        &schema.schema(),
        schema.favorable_label,
    )
    .map_err(stage("load"))?;
    if let Some(name) = &manifest.config.sensitive_column {
        ds = ds.with_audited(name).map_err(stage("load"))?;
    }
    let model = ModelFile::load(&dir.join(MODEL_FILE)).map_err(stage("load"))?;
    let counterfactuals =
        counterfactual::read_dump(&dir.join(COUNTERFACTUAL_FILE)).map_err(stage("load"))?;
    Ok(LoadedRun {
        manifest,
        dataset: ds,
        model,
        counterfactuals,
    })
}

/// Recompute the audit report from a run directory without searching again.
pub fn rebuild_report(dir: &Path) -> Result<AuditReport, PipelineError> {
    let run = load_run(dir)?;
    assemble_report(
        &run.manifest.config,
        run.manifest.dataset.clone(),
        &run.dataset,
        &run.model.model,
        &run.counterfactuals,
    )
}

/// Re-render the scatter plot of a run directory.
pub fn rebuild_plot(dir: &Path) -> Result<String, PipelineError> {
    let run = load_run(dir)?;
    plot::render_svg(&run.dataset, &run.model.model, &run.counterfactuals).map_err(stage("plot"))
}

pub fn report_json(report: &AuditReport) -> Vec<u8> {
    to_json(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub origin_index: usize,
    pub group: i64,
    pub ga_distance: Option<f64>,
    pub oracle_distance: f64,
    /// `ga / oracle`; `None` when the search failed.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub accuracy: f64,
    pub rows: Vec<OracleRow>,
    pub bound: f64,
}

impl OracleCheck {
    pub fn max_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }

    /// Every search succeeded and landed in `[oracle, bound × oracle]`.
    pub fn within_bound(&self) -> bool {
        self.rows.iter().all(|r| {
            r.ga_distance
                .is_some_and(|d| d >= r.oracle_distance && d <= self.bound * r.oracle_distance)
        })
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>6} {:>6} {:>12} {:>12} {:>8}\n",
            "index", "group", "ga", "oracle", "ratio"
        );
        for r in &self.rows {
            let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |v| format!("{v:.p$}"));
            out.push_str(&format!(
                "{:>6} {:>6} {:>12} {:>12.6} {:>8}\n",
                r.origin_index,
                r.group,
                fmt(r.ga_distance, 6),
                r.oracle_distance,
                fmt(r.ratio, 4)
            ));
        }
        out
    }
}

/// Compare the genetic search with the closed-form projection on every
/// predicted-unfavorable point. Always uses the euclidean metric.
pub fn oracle_check(config: &ExperimentConfig, bound: f64) -> Result<OracleCheck, PipelineError> {
    let prepared = prepare_data(config)?;
    let ds = prepared.dataset;
    let (model, accuracy) = train_model(&ds, config)?;
    let mut ga = config.ga.clone();
    ga.distance_metric = DistanceMetric::Euclidean;
    let cfs =
        counterfactual::generate_all(&model, &ds, 0, &ga).map_err(stage("counterfactuals"))?;
    let groups = dataset::split(&ds).sensitive;
    let rows = cfs
        .iter()
        .map(|cf| {
            let oracle = oracle_projection(&model, &cf.origin).map_err(stage("oracle"))?;
            let oracle_distance = oracle.distance.expect("oracle always succeeds");
            Ok(OracleRow {
                origin_index: cf.origin_index,
                group: groups[cf.origin_index],
                ga_distance: cf.distance,
                oracle_distance,
                ratio: cf.distance.map(|d| d / oracle_distance),
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(OracleCheck {
        accuracy,
        rows,
        bound,
    })
}
