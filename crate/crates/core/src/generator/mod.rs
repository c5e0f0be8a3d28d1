//! Sequence policies: distributions over TF sequences with exact gradients.
//!
//! Two model classes share one interface. The mean-field policy samples every
//! step i.i.d. from a softmax over K free logits; the LSTM policy conditions
//! each step on the previously chosen TF through a recurrent state. Both
//! support `grad_log_policy`, the exact gradient of a weighted sum of step
//! log-probabilities, which is all the policy-gradient estimator needs.

mod lstm;
mod mean_field;
mod optimizer;

pub use lstm::{LstmPolicy, LstmTrace};
pub use mean_field::MeanFieldPolicy;
pub use optimizer::{GradientAccumulator, MomentumSgd};

use thiserror::Error;

use crate::rng::RandomSource;
use crate::tf::TfSequence;

/// Numerically stable softmax (max-subtracted). Entries sum to 1.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    assert!(!logits.is_empty(), "softmax of an empty logit vector");
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Inverse-CDF categorical draw using a single uniform variate.
pub fn sample_categorical(probs: &[f64], rng: &mut RandomSource) -> usize {
    assert!(!probs.is_empty(), "cannot sample from an empty distribution");
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Float shortfall: the cumulative sum can land a hair under 1.
    probs.len() - 1
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("step weights have length {got}, but the sampled sequence has {expected} steps")]
    WeightLength { expected: usize, got: usize },
    #[error("the sampled sequence has no recurrent trace; it was not drawn from this LSTM policy")]
    MissingTrace,
    #[error("sampled step {step} names TF id {id}, outside this policy's 1..={k}")]
    IdRange { step: usize, id: usize, k: usize },
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },
}

/// One sampled sequence together with everything its policy needs to
/// differentiate it later: per-step probabilities, log-probabilities, and
/// (for the LSTM) the cached forward states.
#[derive(Debug, Clone)]
pub struct SampledSequence {
    pub sequence: TfSequence,
    /// Per-step categorical distribution the choice was drawn from.
    pub step_probs: Vec<Vec<f64>>,
    /// Log-probability of the choice actually made at each step.
    pub step_log_probs: Vec<f64>,
    /// Cached recurrent states; present iff sampled from an LSTM policy.
    pub trace: Option<LstmTrace>,
}

impl SampledSequence {
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Total log-probability of the whole sequence.
    pub fn log_prob(&self) -> f64 {
        self.step_log_probs.iter().sum()
    }
}

/// A trainable distribution over TF sequences.
#[derive(Debug, Clone)]
pub enum Generator {
    MeanField(MeanFieldPolicy),
    Lstm(LstmPolicy),
}

impl Generator {
    /// Number of TFs this policy chooses among (K).
    pub fn tf_count(&self) -> usize {
        match self {
            Generator::MeanField(p) => p.tf_count(),
            Generator::Lstm(p) => p.tf_count(),
        }
    }

    /// Model class tag used in checkpoints.
    pub fn kind(&self) -> &'static str {
        match self {
            Generator::MeanField(_) => "mean_field",
            Generator::Lstm(_) => "lstm",
        }
    }

    /// Draws a sequence of `len` TF ids, recording what the gradient needs.
    pub fn sample_sequence(&self, len: usize, rng: &mut RandomSource) -> SampledSequence {
        match self {
            Generator::MeanField(p) => p.sample_sequence(len, rng),
            Generator::Lstm(p) => p.sample_sequence(len, rng),
        }
    }

    /// Exact gradient of `sum_t weights[t] * log pi(tau_t | state_{t-1})`
    /// with respect to the flat parameter vector.
    pub fn grad_log_policy(
        &self,
        sampled: &SampledSequence,
        weights: &[f64],
    ) -> Result<GradientAccumulator, GeneratorError> {
        if weights.len() != sampled.len() {
            return Err(GeneratorError::WeightLength {
                expected: sampled.len(),
                got: weights.len(),
            });
        }
        match self {
            Generator::MeanField(p) => p.grad_log_policy(sampled, weights),
            Generator::Lstm(p) => p.grad_log_policy(sampled, weights),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Generator::MeanField(p) => p.param_count(),
            Generator::Lstm(p) => p.param_count(),
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        match self {
            Generator::MeanField(p) => p.params_flat(),
            Generator::Lstm(p) => p.params_flat(),
        }
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<(), GeneratorError> {
        match self {
            Generator::MeanField(p) => p.set_params_flat(params),
            Generator::Lstm(p) => p.set_params_flat(params),
        }
    }

    /// Applies one momentum-SGD descent step to the flat parameters.
    pub fn apply_gradient_update(
        &mut self,
        opt: &mut MomentumSgd,
        grad: &GradientAccumulator,
        lr: f64,
        momentum: f64,
    ) {
        let mut params = self.params_flat();
        opt.step(&mut params, grad.values(), lr, momentum);
        self.set_params_flat(&params)
            .expect("flat parameter layout is stable");
    }

    /// Exact per-TF marginal step distribution, where one exists in closed
    /// form (mean-field only).
    pub fn exact_marginals(&self) -> Option<Vec<f64>> {
        match self {
            Generator::MeanField(p) => Some(p.step_distribution()),
            Generator::Lstm(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_ln3_and_zero() {
        let p = softmax(&[3.0_f64.ln(), 0.0]);
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let p = softmax(&[5.0; 4]);
        for v in p {
            assert_eq!(v, 0.25);
        }
    }

    #[test]
    fn softmax_survives_huge_gaps() {
        let p = softmax(&[1e9, 0.0, -1e9]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[0.3, -1.2, 2.0]);
        let b = softmax(&[100.3, 98.8, 102.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn categorical_sampling_matches_probabilities() {
        let probs = [0.2, 0.5, 0.3];
        let mut rng = RandomSource::new(17);
        let mut counts = [0usize; 3];
        let trials = 100_000;
        for _ in 0..trials {
            counts[sample_categorical(&probs, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            let freq = *c as f64 / trials as f64;
            // 4 sigma of a binomial proportion at n = 1e5.
            let tol = 4.0 * (p * (1.0 - p) / trials as f64).sqrt();
            assert!((freq - p).abs() < tol, "freq {freq} vs p {p}");
        }
    }

    #[test]
    fn degenerate_distribution_always_returns_its_atom() {
        let mut rng = RandomSource::new(5);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }

    #[test]
    fn weight_length_mismatch_is_reported() {
        let gen = Generator::MeanField(MeanFieldPolicy::new(3));
        let mut rng = RandomSource::new(0);
        let sampled = gen.sample_sequence(4, &mut rng);
        let err = gen.grad_log_policy(&sampled, &[1.0; 3]).unwrap_err();
        assert!(matches!(
            err,
            GeneratorError::WeightLength {
                expected: 4,
                got: 3
            }
        ));
    }
}
