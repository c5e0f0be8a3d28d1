//! Training configuration: defaults, JSON loading, validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Space in which the diversity distance between an origin and its fully
/// transformed version is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Euclidean distance between raw input vectors.
    RawInput,
    /// Euclidean distance between discriminator feature vectors. The oracle
    /// discriminator exposes the raw input as its features, so under the
    /// oracle this coincides with `RawInput`.
    Feature,
}

/// Hyperparameters for adversarial policy training.
///
/// All fields have defaults, so a config file only needs to name what it
/// overrides. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    /// Number of TF applications per sequence (default: 10).
    pub sequence_length: usize,
    /// Data points per training batch (default: 32).
    pub batch_points: usize,
    /// Sequences sampled per data point (default: 5).
    pub sequences_per_point: usize,
    /// Discount applied to future incremental rewards, in [0, 1] (default: 1.0).
    pub discount: f64,
    /// Weight of the inverse-diversity term in the generator objective
    /// (default: 0.1; 0 disables it).
    pub diversity_weight: f64,
    /// Space for the diversity distance (default: raw_input).
    pub distance_metric: DistanceMetric,
    /// Generator learning rate (default: 0.05).
    pub gen_lr: f64,
    /// Discriminator learning rate (default: 0.05).
    pub disc_lr: f64,
    /// SGD momentum coefficient for both models (default: 0.9).
    pub momentum: f64,
    /// Training epochs (default: 15). Zero epochs emit the initial checkpoint only.
    pub epochs: usize,
    /// Half-range of the LSTM's output logits (default: 2.0).
    pub logit_scale: f64,
    /// Discriminator probabilities are clamped to
    /// [prob_clamp_eps, 1 - prob_clamp_eps] (default: 1e-6).
    pub prob_clamp_eps: f64,
    /// When true, each batch is split into disjoint halves for the
    /// discriminator and generator updates (default: false).
    pub split_batches: bool,
    /// Master seed for the whole run (default: 0).
    pub seed: u64,
    /// LSTM hidden width (default: 32).
    pub lstm_hidden: usize,
    /// MLP discriminator hidden width (default: 64).
    pub disc_hidden: usize,
    /// Named TF catalog to train against; interpreted by the caller
    /// (default: none).
    pub tf_set: Option<String>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            sequence_length: 10,
            batch_points: 32,
            sequences_per_point: 5,
            discount: 1.0,
            diversity_weight: 0.1,
            distance_metric: DistanceMetric::RawInput,
            gen_lr: 0.05,
            disc_lr: 0.05,
            momentum: 0.9,
            epochs: 15,
            logit_scale: 2.0,
            prob_clamp_eps: 1e-6,
            split_batches: false,
            seed: 0,
            lstm_hidden: 32,
            disc_hidden: 64,
            tf_set: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config file {path} is not valid JSON for a training config")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Loads a JSON config file, fills defaults, rejects unknown keys, validates.
pub fn load_config(path: &Path) -> Result<TrainingConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: TrainingConfig =
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    validate_config(&cfg)?;
    Ok(cfg)
}

/// Checks every field range; the error names the offending field.
pub fn validate_config(cfg: &TrainingConfig) -> Result<(), ConfigError> {
    fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    if cfg.sequence_length == 0 {
        return Err(invalid("sequence_length", "must be at least 1"));
    }
    if cfg.batch_points == 0 {
        return Err(invalid("batch_points", "must be at least 1"));
    }
    if cfg.sequences_per_point == 0 {
        return Err(invalid("sequences_per_point", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&cfg.discount) {
        return Err(invalid(
            "discount",
            format!("must lie in [0, 1], got {}", cfg.discount),
        ));
    }
    if !cfg.diversity_weight.is_finite() || cfg.diversity_weight < 0.0 {
        return Err(invalid(
            "diversity_weight",
            format!("must be finite and >= 0, got {}", cfg.diversity_weight),
        ));
    }
    if !cfg.gen_lr.is_finite() || cfg.gen_lr <= 0.0 {
        return Err(invalid(
            "gen_lr",
            format!("must be finite and > 0, got {}", cfg.gen_lr),
        ));
    }
    if !cfg.disc_lr.is_finite() || cfg.disc_lr <= 0.0 {
        return Err(invalid(
            "disc_lr",
            format!("must be finite and > 0, got {}", cfg.disc_lr),
        ));
    }
    if !(0.0..1.0).contains(&cfg.momentum) {
        return Err(invalid(
            "momentum",
            format!("must lie in [0, 1), got {}", cfg.momentum),
        ));
    }
    if !cfg.logit_scale.is_finite() || cfg.logit_scale <= 0.0 {
        return Err(invalid(
            "logit_scale",
            format!("must be finite and > 0, got {}", cfg.logit_scale),
        ));
    }
    if !(cfg.prob_clamp_eps > 0.0 && cfg.prob_clamp_eps < 0.5) {
        return Err(invalid(
            "prob_clamp_eps",
            format!("must lie in (0, 0.5), got {}", cfg.prob_clamp_eps),
        ));
    }
    if cfg.lstm_hidden == 0 {
        return Err(invalid("lstm_hidden", "must be at least 1"));
    }
    if cfg.disc_hidden == 0 {
        return Err(invalid("disc_hidden", "must be at least 1"));
    }
    Ok(())
}
