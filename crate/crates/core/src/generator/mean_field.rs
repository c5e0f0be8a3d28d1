//! Mean-field policy: every step drawn i.i.d. from one softmax.

use super::optimizer::GradientAccumulator;
use super::{sample_categorical, softmax, GeneratorError, SampledSequence};
use crate::rng::RandomSource;
use crate::tf::TfSequence;

/// K free logits; the step distribution is their softmax, identical at every
/// position in the sequence. Logits start at zero, i.e. uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldPolicy {
    logits: Vec<f64>,
}

impl MeanFieldPolicy {
    /// Uniform policy over `k` TFs.
    pub fn new(k: usize) -> Self {
        assert!(k > 0, "a policy needs at least one TF");
        Self {
            logits: vec![0.0; k],
        }
    }

    /// Rebuilds a policy from checkpointed logits.
    pub fn from_logits(logits: Vec<f64>) -> Self {
        assert!(!logits.is_empty(), "a policy needs at least one TF");
        Self { logits }
    }

    pub fn tf_count(&self) -> usize {
        self.logits.len()
    }

    /// The softmax step distribution (also the exact per-TF marginal).
    pub fn step_distribution(&self) -> Vec<f64> {
        softmax(&self.logits)
    }

    pub fn sample_sequence(&self, len: usize, rng: &mut RandomSource) -> SampledSequence {
        let probs = self.step_distribution();
        let mut ids = Vec::with_capacity(len);
        let mut step_probs = Vec::with_capacity(len);
        let mut step_log_probs = Vec::with_capacity(len);
        for _ in 0..len {
            let choice = sample_categorical(&probs, rng);
            ids.push(choice + 1);
            step_log_probs.push(probs[choice].ln());
            step_probs.push(probs.clone());
        }
        SampledSequence {
            sequence: TfSequence::new(ids),
            step_probs,
            step_log_probs,
            trace: None,
        }
    }

    /// Gradient of `sum_t weights[t] * log softmax(logits)[tau_t]` in the
    /// logits: each step contributes `w_t * (onehot(tau_t) - p)`.
    pub fn grad_log_policy(
        &self,
        sampled: &SampledSequence,
        weights: &[f64],
    ) -> Result<GradientAccumulator, GeneratorError> {
        let k = self.tf_count();
        let mut grad = vec![0.0; k];
        for (step, (&id, &w)) in sampled.sequence.ids.iter().zip(weights).enumerate() {
            if id == 0 || id > k {
                return Err(GeneratorError::IdRange { step, id, k });
            }
            let probs = &sampled.step_probs[step];
            for (g, p) in grad.iter_mut().zip(probs) {
                *g -= w * p;
            }
            grad[id - 1] += w;
        }
        Ok(GradientAccumulator::from_values(grad))
    }

    pub fn param_count(&self) -> usize {
        self.logits.len()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.logits.clone()
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<(), GeneratorError> {
        if params.len() != self.logits.len() {
            return Err(GeneratorError::ParamLength {
                expected: self.logits.len(),
                got: params.len(),
            });
        }
        self.logits.copy_from_slice(params);
        Ok(())
    }
}
