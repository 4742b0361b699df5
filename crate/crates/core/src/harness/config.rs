use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::classifier::TrainConfig;
use crate::counterfactual::GaConfig;
use crate::fairness::{DisparateImpactRule, GroupPair};
use crate::synthgen::{preset_da, preset_db, SyntheticSpec};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "BURDEN_AUDIT_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Da,
    Db,
}

impl Preset {
    pub fn spec(self) -> SyntheticSpec {
        match self {
            Preset::Da => preset_da(),
            Preset::Db => preset_db(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Da => "da",
            Preset::Db => "db",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GaProfile {
    #[default]
    Full,
    Desk,
}

impl GaProfile {
    pub fn config(self) -> GaConfig {
        match self {
            GaProfile::Full => GaConfig::full(),
            GaProfile::Desk => GaConfig::desk(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Preset { preset: Preset },
    Csv { csv: PathBuf, schema: PathBuf },
}

impl DataSource {
    pub fn describe(&self) -> String {
        match self {
            DataSource::Preset { preset } => format!("preset:{}", preset.name()),
            DataSource::Csv { csv, .. } => format!("csv:{}", csv.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Draw this many rows (capped at the cleaned row count) before training.
    pub sample_size: Option<usize>,
    /// Seed for synthetic generation and row sampling.
    pub seed: u64,
    /// Audited sensitive column; the schema's first sensitive column when unset.
    pub sensitive_column: Option<String>,
    pub groups: GroupPair,
    pub disparate_impact_rule: DisparateImpactRule,
    pub train: TrainConfig,
    pub ga: GaConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Built-in defaults for a preset: every seed set to `seed`, GA sized by `profile`.
    pub fn preset(preset: Preset, seed: u64, profile: GaProfile) -> Self {
        Self {
            data: DataSource::Preset { preset },
            sample_size: None,
            seed,
            sensitive_column: None,
            groups: GroupPair::default(),
            disparate_impact_rule: DisparateImpactRule::TwoSided,
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            ga: profile.config().with_seed(seed),
            output_dir: PathBuf::from("runs").join(preset.name()),
        }
    }

    /// Same defaults for an external CSV + schema pair.
    pub fn csv(csv: PathBuf, schema: PathBuf, seed: u64, profile: GaProfile) -> Self {
        Self {
            data: DataSource::Csv { csv, schema },
            output_dir: PathBuf::from("runs").join("csv"),
            ..Self::preset(Preset::Da, seed, profile)
        }
    }

    /// Set the data, training and GA seeds together.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        self.ga.seed = seed;
    }

    /// Overlay a TOML config file on top of `base`.
    ///
    /// Tables merge key by key, except `data`, which replaces the base source
    /// wholesale. A top-level `profile` key swaps the GA defaults before merging.
    pub fn overlay_file(base: Self, path: &Path) -> Result<Self, PipelineError> {
        let err = |message: String| PipelineError::Config(format!("{}: {message}", path.display()));
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut overlay: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| err(e.to_string()))?;

        let mut base = base;
        if let Some(profile) = overlay.remove("profile") {
            let profile: GaProfile = profile
                .try_into()
                .map_err(|e: toml::de::Error| err(e.to_string()))?;
            let seed = base.ga.seed;
            base.ga = profile.config().with_seed(seed);
        }
        let sets_data = overlay.contains_key("data");
        let base_json = serde_json::to_value(&base).expect("config serializes");
        let overlay_json = serde_json::to_value(&overlay).map_err(|e| err(e.to_string()))?;
        let merged = merge(base_json, overlay_json);
        let mut config: Self = serde_json::from_value(merged).map_err(|e| err(e.to_string()))?;

        // Data paths in a config file are relative to the file itself.
        if sets_data {
            if let (DataSource::Csv { csv, schema }, Some(dir)) = (&mut config.data, path.parent())
            {
                for p in [csv, schema] {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(config)
    }

    /// SHA-256 over the canonical JSON form, ignoring `output_dir`.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn merge(base: serde_json::Value, overlay: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match (base, overlay) {
        (Value::Object(mut b), Value::Object(o)) => {
            for (key, value) in o {
                let merged = match b.remove(&key) {
                    Some(existing) if key != "data" => merge(existing, value),
                    _ => value,
                };
                b.insert(key, merged);
            }
            Value::Object(b)
        }
        (_, overlay) => overlay,
    }
}
