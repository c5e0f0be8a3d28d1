//! JSON checkpoints of the adversarial training state.
//!
//! A checkpoint captures everything needed to resume sampling or continue
//! diagnostics: both models' flat parameters, their optimizer velocities, and
//! the identifiers (seed, TF-set tag, TF names) required to rebuild the
//! matching registry. TF implementations themselves are code, so they are
//! reconstructed from the tag rather than stored; [`Checkpoint::restore`]
//! cross-checks the registry the caller rebuilt against the recorded names.
//!
//! Floats survive the round trip bit-exactly: serialization uses the shortest
//! decimal form that parses back to the identical `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::TrainingConfig;
use crate::discriminator::{Discriminator, MlpDiscriminator, OracleDiscriminator};
use crate::generator::{Generator, LstmPolicy, MeanFieldPolicy, MomentumSgd};
use crate::training::TrainState;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("failed to access checkpoint file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint file {path} is not valid")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("checkpoint is inconsistent: {0}")]
    Schema(String),
}

/// Generator state, tagged by model class.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorCheckpoint {
    MeanField {
        tf_count: usize,
        params: Vec<f64>,
        velocity: Vec<f64>,
    },
    Lstm {
        tf_count: usize,
        hidden: usize,
        logit_scale: f64,
        params: Vec<f64>,
        velocity: Vec<f64>,
    },
}

/// Discriminator state, tagged by model class. The oracle is parameter-free.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiscriminatorCheckpoint {
    Oracle {
        radius: f64,
    },
    Mlp {
        input_dim: usize,
        hidden: usize,
        params: Vec<f64>,
        velocity: Vec<f64>,
    },
}

/// One self-contained snapshot of a training run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    /// Number of completed training epochs at capture time.
    pub epoch: usize,
    /// Master seed of the run.
    pub seed: u64,
    /// Sequence length the policy was trained with.
    pub sequence_length: usize,
    /// TF-set tag the registry was built from, when one was named.
    pub tf_set: Option<String>,
    /// Names of the registered TFs, in id order.
    pub tf_names: Vec<String>,
    pub generator: GeneratorCheckpoint,
    pub discriminator: DiscriminatorCheckpoint,
}

impl Checkpoint {
    /// Conventional file name for the checkpoint written after `epoch`.
    pub fn standard_file_name(epoch: usize) -> String {
        format!("checkpoint_epoch_{epoch:03}.json")
    }

    /// Snapshots a training state together with its registry's TF names.
    pub fn capture(state: &TrainState, tf_names: &[String], cfg: &TrainingConfig) -> Self {
        let generator = match &state.generator {
            Generator::MeanField(p) => GeneratorCheckpoint::MeanField {
                tf_count: p.tf_count(),
                params: p.params_flat(),
                velocity: state.gen_opt.velocity().to_vec(),
            },
            Generator::Lstm(p) => GeneratorCheckpoint::Lstm {
                tf_count: p.tf_count(),
                hidden: p.hidden_width(),
                logit_scale: p.logit_scale(),
                params: p.params_flat(),
                velocity: state.gen_opt.velocity().to_vec(),
            },
        };
        let discriminator = match &state.discriminator {
            Discriminator::Oracle(o) => DiscriminatorCheckpoint::Oracle { radius: o.radius },
            Discriminator::Mlp(m) => DiscriminatorCheckpoint::Mlp {
                input_dim: m.input_dim(),
                hidden: m.hidden_width(),
                params: m.params_flat(),
                velocity: state.disc_opt.velocity().to_vec(),
            },
        };
        Self {
            epoch: state.epoch,
            seed: state.seed,
            sequence_length: cfg.sequence_length,
            tf_set: cfg.tf_set.clone(),
            tf_names: tf_names.to_vec(),
            generator,
            discriminator,
        }
    }

    /// Rebuilds the training state. `registry_names` are the TF names of the
    /// registry the caller reconstructed; they must match what was trained.
    pub fn restore(&self, registry_names: &[String]) -> Result<TrainState, CheckpointError> {
        if registry_names != self.tf_names.as_slice() {
            return Err(CheckpointError::Schema(format!(
                "registry TF names {:?} do not match checkpointed names {:?}",
                registry_names, self.tf_names
            )));
        }
        let (generator, gen_velocity) = self.build_generator()?;
        let (discriminator, disc_velocity) = self.build_discriminator()?;
        Ok(TrainState {
            gen_opt: MomentumSgd::from_velocity(gen_velocity),
            disc_opt: MomentumSgd::from_velocity(disc_velocity),
            generator,
            discriminator,
            epoch: self.epoch,
            seed: self.seed,
        })
    }

    fn build_generator(&self) -> Result<(Generator, Vec<f64>), CheckpointError> {
        match &self.generator {
            GeneratorCheckpoint::MeanField {
                tf_count,
                params,
                velocity,
            } => {
                check_shape("generator", *tf_count, params, velocity)?;
                if self.tf_names.len() != *tf_count {
                    return Err(CheckpointError::Schema(format!(
                        "generator covers {} TFs but {} names are recorded",
                        tf_count,
                        self.tf_names.len()
                    )));
                }
                let policy = MeanFieldPolicy::from_logits(params.clone());
                Ok((Generator::MeanField(policy), velocity.clone()))
            }
            GeneratorCheckpoint::Lstm {
                tf_count,
                hidden,
                logit_scale,
                params,
                velocity,
            } => {
                if *tf_count == 0 || *hidden == 0 {
                    return Err(CheckpointError::Schema(format!(
                        "LSTM shape ({tf_count} TFs, {hidden} hidden) is degenerate"
                    )));
                }
                if !(logit_scale.is_finite() && *logit_scale > 0.0) {
                    return Err(CheckpointError::Schema(format!(
                        "LSTM logit scale {logit_scale} is not a positive finite number"
                    )));
                }
                if self.tf_names.len() != *tf_count {
                    return Err(CheckpointError::Schema(format!(
                        "generator covers {} TFs but {} names are recorded",
                        tf_count,
                        self.tf_names.len()
                    )));
                }
                let expected = LstmPolicy::expected_param_count(*tf_count, *hidden);
                check_shape("generator", expected, params, velocity)?;
                let policy = LstmPolicy::from_params(*tf_count, *hidden, *logit_scale, params)
                    .map_err(|e| CheckpointError::Schema(e.to_string()))?;
                Ok((Generator::Lstm(policy), velocity.clone()))
            }
        }
    }

    fn build_discriminator(&self) -> Result<(Discriminator, Vec<f64>), CheckpointError> {
        match &self.discriminator {
            DiscriminatorCheckpoint::Oracle { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(CheckpointError::Schema(format!(
                        "oracle radius {radius} is not a positive finite number"
                    )));
                }
                Ok((
                    Discriminator::Oracle(OracleDiscriminator::new(*radius)),
                    Vec::new(),
                ))
            }
            DiscriminatorCheckpoint::Mlp {
                input_dim,
                hidden,
                params,
                velocity,
            } => {
                if *input_dim == 0 || *hidden == 0 {
                    return Err(CheckpointError::Schema(format!(
                        "MLP shape ({input_dim} inputs, {hidden} hidden) is degenerate"
                    )));
                }
                let expected = hidden * input_dim + hidden + hidden + 1;
                check_shape("discriminator", expected, params, velocity)?;
                let disc = MlpDiscriminator::from_params(*input_dim, *hidden, params)
                    .map_err(|e| CheckpointError::Schema(e.to_string()))?;
                Ok((Discriminator::Mlp(disc), velocity.clone()))
            }
        }
    }

    /// Writes the checkpoint as pretty-printed JSON.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let json = serde_json::to_string_pretty(self).map_err(|source| CheckpointError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        std::fs::write(path, json + "\n").map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Reads a checkpoint back from JSON.
    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CheckpointError::Parse {
            path: path.display().to_string(),
            source,
        })
    }
}

fn check_shape(
    which: &str,
    expected: usize,
    params: &[f64],
    velocity: &[f64],
) -> Result<(), CheckpointError> {
    if params.len() != expected {
        return Err(CheckpointError::Schema(format!(
            "{which} has {} parameters, expected {expected}",
            params.len()
        )));
    }
    if velocity.len() != expected {
        return Err(CheckpointError::Schema(format!(
            "{which} velocity has {} entries, expected {expected}",
            velocity.len()
        )));
    }
    if let Some(bad) = params.iter().chain(velocity).find(|v| !v.is_finite()) {
        return Err(CheckpointError::Schema(format!(
            "{which} state contains a non-finite value ({bad})"
        )));
    }
    Ok(())
}
