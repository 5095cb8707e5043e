//! Resolved run configuration: one JSON document covering data synthesis,
//! training, and evaluation, hashed into a digest that every output artifact
//! echoes for provenance.
//!
//! Every field has a default, so a config file may specify any subset and
//! command-line overrides are applied on top of the parsed value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::SyntheticSpec;
use crate::eval::NnMode;
use crate::gan::TrainConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which nearest-neighbor modes an evaluation run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NnModeChoice {
    #[default]
    Instance,
    Pivot,
    Both,
}

impl NnModeChoice {
    pub fn modes(self) -> Vec<NnMode> {
        match self {
            NnModeChoice::Instance => vec![NnMode::Instance],
            NnModeChoice::Pivot => vec![NnMode::Pivot],
            NnModeChoice::Both => vec![NnMode::Instance, NnMode::Pivot],
        }
    }
}

impl std::str::FromStr for NnModeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instance" => Ok(NnModeChoice::Instance),
            "pivot" => Ok(NnModeChoice::Pivot),
            "both" => Ok(NnModeChoice::Both),
            other => Err(format!(
                "unknown nearest-neighbor mode {other:?} (expected instance, pivot, or both)"
            )),
        }
    }
}

fn default_per_class() -> usize {
    crate::eval::DEFAULT_SYNTH_PER_CLASS
}

fn default_eval_seed() -> u64 {
    1000
}

fn default_ratios() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

/// Evaluation-side knobs shared by the recognition, generalized, and
/// retrieval protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Synthesized vectors per class in the evaluation bank.
    pub per_class: usize,
    /// Seed for the bank's noise streams, independent of the training seed.
    pub seed: u64,
    pub nn_mode: NnModeChoice,
    /// Retrieval cutoffs as fractions of each class's gallery count.
    pub ratios: Vec<f64>,
    /// Sweep 10001 calibration values instead of the default 201.
    pub dense_grid: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            per_class: default_per_class(),
            seed: default_eval_seed(),
            nn_mode: NnModeChoice::default(),
            ratios: default_ratios(),
            dense_grid: false,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.per_class == 0 {
            return Err(ConfigError::Invalid(
                "per_class must be at least 1".to_string(),
            ));
        }
        if self.ratios.is_empty() {
            return Err(ConfigError::Invalid(
                "ratios must not be empty".to_string(),
            ));
        }
        for &r in &self.ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(ConfigError::Invalid(format!(
                    "retrieval ratio {r} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// The full resolved configuration of a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub synth: SyntheticSpec,
    pub eval: EvalOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.synth
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.eval.validate()
    }

    /// Hex SHA-256 of the canonical JSON form. Field order is fixed by the
    /// struct definitions, so equal configs always hash equally.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in hash {
            write!(out, "{byte:02x}").expect("writing to a String");
        }
        out
    }
}
