//! Transformation functions (TFs), the registry, and rollout trajectories.
//!
//! A TF is an opaque, possibly stochastic map from one data point to another
//! of the same dimension. TFs are registered once, get stable 1-based ids,
//! and are applied through the registry so that dimension and finiteness
//! guarantees hold no matter what the underlying closure does.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::point::DataPoint;
use crate::rng::RandomSource;

/// Signature of a TF implementation.
pub type TfOp = Arc<dyn Fn(&DataPoint, &mut RandomSource) -> DataPoint + Send + Sync>;

/// A registered transformation function with a stable id and display name.
#[derive(Clone)]
pub struct TransformationFunction {
    id: usize,
    name: String,
    op: TfOp,
}

impl TransformationFunction {
    /// 1-based id assigned at registration.
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for TransformationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformationFunction")
            .field("id", &self.id)
            .field("name", &self.name)
            .finish()
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("a TF named {0:?} is already registered")]
    DuplicateName(String),
    #[error("TF names must be non-empty")]
    EmptyName,
    #[error("unknown TF id {id} (registry holds {len} TFs with ids 1..={len})")]
    UnknownId { id: usize, len: usize },
    #[error("TF {name:?} changed the point dimension from {from} to {to}")]
    DimensionChanged {
        name: String,
        from: usize,
        to: usize,
    },
    #[error("TF {name:?} produced a non-finite coordinate")]
    NonFinite { name: String },
}

/// Ordered collection of TFs; ids are 1..=K in registration order.
#[derive(Debug, Clone, Default)]
pub struct TfRegistry {
    tfs: Vec<TransformationFunction>,
}

impl TfRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a TF under a unique, non-empty name and returns its id.
    pub fn register<F>(&mut self, name: &str, op: F) -> Result<usize, RegistryError>
    where
        F: Fn(&DataPoint, &mut RandomSource) -> DataPoint + Send + Sync + 'static,
    {
        if name.is_empty() {
            return Err(RegistryError::EmptyName);
        }
        if self.tfs.iter().any(|tf| tf.name == name) {
            return Err(RegistryError::DuplicateName(name.to_string()));
        }
        let id = self.tfs.len() + 1;
        self.tfs.push(TransformationFunction {
            id,
            name: name.to_string(),
            op: Arc::new(op),
        });
        Ok(id)
    }

    /// Number of registered TFs (K).
    pub fn len(&self) -> usize {
        self.tfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tfs.is_empty()
    }

    pub fn get(&self, id: usize) -> Result<&TransformationFunction, RegistryError> {
        if id == 0 || id > self.tfs.len() {
            return Err(RegistryError::UnknownId {
                id,
                len: self.tfs.len(),
            });
        }
        Ok(&self.tfs[id - 1])
    }

    /// Registered names in id order.
    pub fn names(&self) -> Vec<String> {
        self.tfs.iter().map(|tf| tf.name.clone()).collect()
    }

    /// Applies one TF by id, enforcing the dimension/finiteness guarantees.
    pub fn apply(
        &self,
        id: usize,
        x: &DataPoint,
        rng: &mut RandomSource,
    ) -> Result<DataPoint, RegistryError> {
        let tf = self.get(id)?;
        let out = (tf.op)(x, rng);
        if out.dim() != x.dim() {
            return Err(RegistryError::DimensionChanged {
                name: tf.name.clone(),
                from: x.dim(),
                to: out.dim(),
            });
        }
        if !out.is_finite() {
            return Err(RegistryError::NonFinite {
                name: tf.name.clone(),
            });
        }
        Ok(out)
    }

    /// Applies a whole sequence, recording every intermediate state.
    pub fn apply_sequence(
        &self,
        seq: &TfSequence,
        x: &DataPoint,
        rng: &mut RandomSource,
    ) -> Result<Trajectory, RegistryError> {
        let mut states = Vec::with_capacity(seq.len());
        let mut current = x.clone();
        for &id in &seq.ids {
            current = self.apply(id, &current, rng)?;
            states.push(current.clone());
        }
        Ok(Trajectory {
            origin: x.clone(),
            sequence: seq.clone(),
            states,
        })
    }
}

/// A sequence of TF ids (1-based), to be applied left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TfSequence {
    pub ids: Vec<usize>,
}

impl TfSequence {
    pub fn new(ids: Vec<usize>) -> Self {
        Self { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// A rollout: the origin point and every intermediate state of one sequence.
///
/// `states[t]` is the point after the first `t + 1` TFs, so `states` has the
/// same length as the sequence and the final state is `states.last()`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub origin: DataPoint,
    pub sequence: TfSequence,
    pub states: Vec<DataPoint>,
}

impl Trajectory {
    /// The fully transformed point (the origin for an empty sequence).
    pub fn final_point(&self) -> &DataPoint {
        self.states.last().unwrap_or(&self.origin)
    }
}
