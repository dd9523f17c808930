//! Experiment configuration: a JSON file with `model`, `data` and `train`
//! sections plus a seed. Optional fields have stated defaults, and every
//! run echoes the fully resolved configuration so experiments are
//! self-describing; feeding an echo back reproduces the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mclnn_core::error::{Error, Result};
use mclnn_core::model::ModelConfig;
use mclnn_core::training::TrainConfig;

#[derive(Clone, Debug, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: ModelConfig,
    pub data: DataSection,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Clone, Debug, Deserialize)]
pub struct DataSection {
    pub manifest: String,
    #[serde(default)]
    pub delta: Option<bool>,
    /// Segment hop; defaults to the segment width q (non-overlapping).
    #[serde(default)]
    pub hop: Option<usize>,
    /// Fold held out for validation by `train`; defaults to 2.
    #[serde(default)]
    pub val_fold: Option<usize>,
    /// Fold held out for testing by `train`; defaults to 1.
    #[serde(default)]
    pub test_fold: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct TrainSection {
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub dropout_clnn: Option<f64>,
    #[serde(default)]
    pub dropout_dense: Option<f64>,
    #[serde(default)]
    pub patience: Option<usize>,
}

/// Every field materialized; serializes as the config echo and parses
/// back as an [`ExperimentConfig`] that resolves to itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub data: ResolvedData,
    pub train: ResolvedTrain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedData {
    pub manifest: String,
    pub delta: bool,
    pub hop: usize,
    pub val_fold: usize,
    pub test_fold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTrain {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout_clnn: f64,
    pub dropout_dense: f64,
    pub patience: Option<usize>,
}

impl ResolvedConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            seed: self.seed,
            dropout_clnn: self.train.dropout_clnn,
            dropout_dense: self.train.dropout_dense,
            patience: self.train.patience,
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        PathBuf::from(&self.data.manifest)
    }

    pub fn echo_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn echo_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads and resolves a config file. Relative manifest paths are taken
/// relative to the config file's directory and materialized, so the echo
/// runs identically from anywhere. `seed_override` is the already-decided
/// flag/env seed (flag > env > config > 0).
pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let parsed: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parsed.model.validate()?;

    // Materialize an absolute manifest path so the echo reproduces the
    // run no matter where it is re-launched from.
    let manifest_raw = PathBuf::from(&parsed.data.manifest);
    let manifest = if manifest_raw.is_absolute() {
        manifest_raw
    } else {
        let config_dir = std::path::absolute(path)
            .map_err(|e| Error::Config(format!("cannot resolve {}: {e}", path.display())))?
            .parent()
            .unwrap_or(Path::new("/"))
            .to_path_buf();
        config_dir.join(manifest_raw)
    };

    let q = parsed.model.segment_width();
    let defaults = TrainConfig::default();
    let resolved = ResolvedConfig {
        seed: seed_override.or(parsed.seed).unwrap_or(0),
        model: parsed.model,
        data: ResolvedData {
            manifest: manifest.to_string_lossy().into_owned(),
            delta: parsed.data.delta.unwrap_or(false),
            hop: parsed.data.hop.unwrap_or(q),
            val_fold: parsed.data.val_fold.unwrap_or(2),
            test_fold: parsed.data.test_fold.unwrap_or(1),
        },
        train: ResolvedTrain {
            epochs: parsed.train.epochs.unwrap_or(defaults.epochs),
            batch_size: parsed.train.batch_size.unwrap_or(defaults.batch_size),
            learning_rate: parsed.train.learning_rate.unwrap_or(defaults.learning_rate),
            dropout_clnn: parsed.train.dropout_clnn.unwrap_or(defaults.dropout_clnn),
            dropout_dense: parsed.train.dropout_dense.unwrap_or(defaults.dropout_dense),
            patience: parsed.train.patience,
        },
    };
    if resolved.data.hop == 0 {
        return Err(Error::Config("hop must be at least 1".into()));
    }
    resolved.train_config().validate()?;
    Ok(resolved)
}
