//! Adversarial training of data-augmentation policies.
//!
//! This crate learns how to *compose* black-box data transformations.
//! A generative sequence policy (mean-field or LSTM) emits sequences of
//! transformation functions (TFs); a null-class discriminator scores whether
//! the transformed points still look like real data; score-function policy
//! gradients with incremental per-step rewards push the policy away from
//! compositions that map data out of its distribution.
//!
//! Module map:
//! - [`rng`]: seeded, splittable random streams (the determinism contract).
//! - [`point`], [`tf`]: data points, TF registry, sequences, trajectories.
//! - [`config`]: training configuration, JSON loading, validation.
//! - [`generator`]: mean-field and LSTM policies with exact analytic gradients.
//! - [`discriminator`]: analytic oracle and trainable MLP null-class models.
//! - [`training`]: reward tapes, policy-gradient estimation, adversarial loop,
//!   sequence diagnostics (generalized Jaccard, n-gram uniqueness).
//! - [`checkpoint`]: JSON snapshots of generator/discriminator/optimizer state.
//! - [`synthetic`]: unit-ball worlds and the reference experiments.
//! - [`raster`]: grayscale image TFs (affine warps) and IDX dataset I/O.
//! - [`endmodel`]: downstream classifier trained with learned augmentation.

pub mod checkpoint;
pub mod config;
pub mod discriminator;
pub mod endmodel;
pub mod generator;
mod linalg;
pub mod point;
pub mod raster;
pub mod rng;
pub mod synthetic;
pub mod tf;
pub mod training;

pub use config::{load_config, validate_config, DistanceMetric, TrainingConfig};
pub use point::DataPoint;
pub use rng::RandomSource;
pub use tf::{TfRegistry, TfSequence, Trajectory, TransformationFunction};
