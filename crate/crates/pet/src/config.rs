//! Effective command-line configuration: defaults, then a config file,
//! then flags.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pet_core::featurize::{FeaturizerConfig, DEFAULT_HASH_DIM, DEFAULT_HASH_SEED};
use pet_core::nn::AdamConfig;
use pet_core::{ModelVariant, SelectionMetric, Task, TrainConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::FormatError;

/// Directory searched for `peld.csv` when no data path is given.
pub const DATA_DIR_ENV: &str = "PET_DATA_DIR";
pub const DEFAULT_DATA_FILE: &str = "peld.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturizerMode {
    Hash,
    Embeddings,
}

impl FromStr for FeaturizerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hash" => Ok(FeaturizerMode::Hash),
            "embeddings" => Ok(FeaturizerMode::Embeddings),
            _ => Err(format!("unknown featurizer mode `{s}`")),
        }
    }
}

mod text {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    #[serde(with = "text")]
    pub variant: ModelVariant,
    #[serde(with = "text")]
    pub task: Task,
    pub featurizer: FeaturizerMode,
    pub embeddings: Option<PathBuf>,
    pub hash_dim: usize,
    pub hash_seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub gamma: f64,
    pub hidden: usize,
    pub delta_bound: f64,
    pub selection: SelectionMetric,
    /// Reject the whole file on the first malformed record.
    pub strict: bool,
}

impl Default for CliConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            data: None,
            out: PathBuf::from("pet-out"),
            variant: t.variant,
            task: t.task,
            featurizer: FeaturizerMode::Hash,
            embeddings: None,
            hash_dim: DEFAULT_HASH_DIM,
            hash_seed: DEFAULT_HASH_SEED,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: t.seed,
            lr: t.adam.lr,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            eps: t.adam.eps,
            gamma: t.gamma,
            hidden: t.hidden,
            delta_bound: t.delta_bound,
            selection: t.selection,
            strict: true,
        }
    }
}

const STRING_KEYS: [&str; 7] = [
    "data",
    "out",
    "variant",
    "task",
    "featurizer",
    "embeddings",
    "selection",
];

impl CliConfig {
    /// Parses a JSON object or `key = value` lines (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let config_err = |e: serde_json::Error| FormatError::Config(e.to_string());
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(config_err);
        }
        let mut map = serde_json::Map::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FormatError::Config(format!("line {}: expected key = value", i + 1))
            })?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            let json = if STRING_KEYS.contains(&key.as_str()) {
                serde_json::Value::String(value.to_string())
            } else {
                serde_json::from_str(value).map_err(|_| {
                    FormatError::Config(format!(
                        "line {}: `{value}` is not a value for {key}",
                        i + 1
                    ))
                })?
            };
            map.insert(key, json);
        }
        serde_json::from_value(serde_json::Value::Object(map)).map_err(config_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
        Self::parse(&text)
    }

    /// The configured data file, falling back to the data directory
    /// named by the environment.
    pub fn data_path(&self) -> Option<PathBuf> {
        self.data.clone().or_else(|| {
            std::env::var_os(DATA_DIR_ENV).map(|d| PathBuf::from(d).join(DEFAULT_DATA_FILE))
        })
    }

    /// Training configuration for a featurizer of the given setup.
    pub fn train_config(&self, featurizer: FeaturizerConfig) -> TrainConfig {
        TrainConfig {
            variant: self.variant,
            task: self.task,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
            gamma: self.gamma,
            hidden: self.hidden,
            delta_bound: self.delta_bound,
            selection: self.selection,
            featurizer,
        }
    }
}
