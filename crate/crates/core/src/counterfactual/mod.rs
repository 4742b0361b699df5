//! Counterfactual search: for a datapoint, find the nearest point the model
//! classifies the other way.
//!
//! [`generate_counterfactual`] runs the genetic search against any
//! [`LinearModel`] through its predictions only. [`oracle_projection`] is the
//! closed-form answer for the same linear model under the euclidean metric and
//! serves as the reference the search is checked against.

mod genetic;
mod oracle;

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::LinearModel;
use crate::dataset::Dataset;

pub use genetic::SearchTrace;
pub use oracle::oracle_projection;

#[derive(Debug, Error)]
pub enum CounterfactualError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("candidate coincides with the origin (zero distance)")]
    ZeroDistance,
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("no feature ranges configured and none derivable")]
    MissingRanges,
    #[error("zero weight vector has no decision boundary")]
    ZeroWeights,
    #[error("counterfactual dump {path}: {message}")]
    Dump { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, CounterfactualError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Manhattan,
}

impl DistanceMetric {
    pub(crate) fn eval(self, x: &[f64], c: &[f64]) -> f64 {
        let diffs = x.iter().zip(c).map(|(a, b)| (a - b).abs());
        match self {
            DistanceMetric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            DistanceMetric::Manhattan => diffs.sum(),
        }
    }
}

pub fn distance(x: &[f64], c: &[f64], metric: DistanceMetric) -> Result<f64> {
    if x.len() != c.len() {
        return Err(CounterfactualError::LengthMismatch(x.len(), c.len()));
    }
    Ok(metric.eval(x, c))
}

/// `1 / d(x, c)`. A candidate equal to the origin is rejected.
pub fn fitness(x: &[f64], c: &[f64], metric: DistanceMetric) -> Result<f64> {
    let d = distance(x, c, metric)?;
    if d == 0.0 {
        return Err(CounterfactualError::ZeroDistance);
    }
    Ok(1.0 / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl From<(f64, f64)> for FeatureRange {
    fn from((min, max): (f64, f64)) -> Self {
        Self { min, max }
    }
}

impl FeatureRange {
    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub retained_after_selection: usize,
    pub retained_for_next_generation: usize,
    pub generations: usize,
    pub mutation_probability: f64,
    pub crossover_probability: f64,
    /// `None`: use the observed per-feature extent of the audited dataset.
    pub feature_ranges: Option<Vec<FeatureRange>>,
    pub distance_metric: DistanceMetric,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl GaConfig {
    /// Full-size search: 60,000 candidates, 10,000 selected, 5,000 carried, 10 generations.
    pub fn full() -> Self {
        Self {
            population_size: 60_000,
            retained_after_selection: 10_000,
            retained_for_next_generation: 5_000,
            generations: 10,
            mutation_probability: 0.2,
            crossover_probability: 0.5,
            feature_ranges: None,
            distance_metric: DistanceMetric::Euclidean,
            seed: 0,
        }
    }

    /// The full profile scaled down 100x in population and retention.
    pub fn desk() -> Self {
        Self {
            population_size: 600,
            retained_after_selection: 100,
            retained_for_next_generation: 50,
            ..Self::full()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_ranges(mut self, ranges: Vec<FeatureRange>) -> Self {
        self.feature_ranges = Some(ranges);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CounterfactualError::Config(m.to_string()));
        if self.population_size == 0
            || self.generations == 0
            || self.retained_for_next_generation == 0
        {
            return bad(
                "population_size, generations and retained_for_next_generation must be positive",
            );
        }
        if !(self.retained_for_next_generation <= self.retained_after_selection
            && self.retained_after_selection <= self.population_size)
        {
            return bad(
                "need retained_for_next_generation <= retained_after_selection <= population_size",
            );
        }
        for p in [self.mutation_probability, self.crossover_probability] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if let Some(ranges) = &self.feature_ranges {
            if ranges
                .iter()
                .any(|r| !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max))
            {
                return bad("every feature range needs finite min <= max");
            }
        }
        Ok(())
    }
}

/// Best opposite-class point found for the datapoint at `origin_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub origin_index: usize,
    pub origin: Vec<f64>,
    /// `None` when the search never saw an opposite-class candidate.
    pub c_star: Option<Vec<f64>>,
    pub distance: Option<f64>,
    pub generations_run: usize,
    pub valid: bool,
}

impl Counterfactual {
    pub(crate) fn found(
        origin_index: usize,
        origin: Vec<f64>,
        c_star: Vec<f64>,
        distance: f64,
        generations_run: usize,
    ) -> Self {
        Self {
            origin_index,
            origin,
            c_star: Some(c_star),
            distance: Some(distance),
            generations_run,
            valid: true,
        }
    }

    pub(crate) fn not_found(origin_index: usize, origin: Vec<f64>, generations_run: usize) -> Self {
        Self {
            origin_index,
            origin,
            c_star: None,
            distance: None,
            generations_run,
            valid: false,
        }
    }
}

/// Random stream for one origin point: ChaCha8 keyed by the master seed,
/// with the point index as the stream id. Independent of scheduling order.
pub(crate) fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_inputs(model: &LinearModel, x: &[f64], ranges: &[FeatureRange]) -> Result<()> {
    if x.len() != model.feature_count() {
        return Err(CounterfactualError::LengthMismatch(
            x.len(),
            model.feature_count(),
        ));
    }
    if ranges.len() != x.len() {
        return Err(CounterfactualError::LengthMismatch(ranges.len(), x.len()));
    }
    Ok(())
}

/// Genetic search for one point. Uses stream 0 of `config.seed`, so it agrees
/// with [`generate_all`] for the point at index 0.
pub fn generate_counterfactual(
    model: &LinearModel,
    x: &[f64],
    config: &GaConfig,
) -> Result<Counterfactual> {
    generate_counterfactual_traced(model, x, 0, config).map(|(cf, _)| cf)
}

pub fn generate_counterfactual_traced(
    model: &LinearModel,
    x: &[f64],
    origin_index: usize,
    config: &GaConfig,
) -> Result<(Counterfactual, SearchTrace)> {
    config.validate()?;
    let ranges = config
        .feature_ranges
        .as_deref()
        .ok_or(CounterfactualError::MissingRanges)?;
    check_inputs(model, x, ranges)?;
    let mut rng = point_rng(config.seed, origin_index);
    Ok(genetic::search(
        model,
        x,
        origin_index,
        config,
        ranges,
        &mut rng,
    ))
}

/// Counterfactuals for every point whose prediction equals `target_class`,
/// in dataset order. Points are searched in parallel; each uses its own
/// index-keyed stream, so results match a sequential run bit for bit.
pub fn generate_all(
    model: &LinearModel,
    dataset: &Dataset,
    target_class: u8,
    config: &GaConfig,
) -> Result<Vec<Counterfactual>> {
    config.validate()?;
    let ranges: Vec<FeatureRange> = match &config.feature_ranges {
        Some(r) => r.clone(),
        None => dataset
            .feature_extent()
            .into_iter()
            .map(Into::into)
            .collect(),
    };
    let targets: Vec<usize> = dataset
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.x.len() == model.feature_count() && model.predict_unchecked(&p.x) == target_class
        })
        .map(|(i, _)| i)
        .collect();
    if let Some(p) = dataset
        .points
        .iter()
        .find(|p| p.x.len() != model.feature_count())
    {
        return Err(CounterfactualError::LengthMismatch(
            p.x.len(),
            model.feature_count(),
        ));
    }
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    check_inputs(model, &dataset.points[targets[0]].x, &ranges)?;
    Ok(targets
        .par_iter()
        .map(|&i| {
            let mut rng = point_rng(config.seed, i);
            genetic::search(model, &dataset.points[i].x, i, config, &ranges, &mut rng).0
        })
        .collect())
}

/// One JSON record per line.
pub fn write_dump(path: &Path, counterfactuals: &[Counterfactual]) -> Result<()> {
    let err = |e: std::io::Error| CounterfactualError::Dump {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut out = BufWriter::new(fs::File::create(path).map_err(err)?);
    for cf in counterfactuals {
        let line = serde_json::to_string(cf).expect("counterfactual serializes");
        writeln!(out, "{line}").map_err(err)?;
    }
    out.flush().map_err(err)
}

pub fn read_dump(path: &Path) -> Result<Vec<Counterfactual>> {
    let err = |message: String| CounterfactualError::Dump {
        path: path.display().to_string(),
        message,
    };
    let file = fs::File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cf: Counterfactual =
            serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
        if cf.valid != (cf.c_star.is_some() && cf.distance.is_some()) {
            return Err(err(format!(
                "line {}: validity flag disagrees with payload",
                i + 1
            )));
        }
        out.push(cf);
    }
    Ok(out)
}
