//! LSTM policy: each step conditioned on the previously chosen TF.
//!
//! A standard LSTM cell (gate order: input, forget, cell, output) reads a
//! one-hot encoding of the last chosen TF — a trainable free vector at the
//! first step — and its hidden state is projected to K logits squashed to
//! `[-scale, scale]` by `scale * tanh(..)`. Gradients are exact: the sampled
//! sequence carries the full forward trace and `grad_log_policy` runs
//! backpropagation through time over it.

use super::optimizer::GradientAccumulator;
use super::{sample_categorical, softmax, GeneratorError, SampledSequence};
use crate::linalg::{matvec_acc, matvec_transpose_acc, outer_acc};
use crate::rng::RandomSource;
use crate::tf::TfSequence;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cached forward state of one LSTM step, enough to run the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepState {
    /// Cell input: one-hot of the previous choice, or the trainable first input.
    input: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    cell: Vec<f64>,
    hidden: Vec<f64>,
    /// Pre-tanh output projection (length K).
    proj: Vec<f64>,
}

/// Forward trace of a whole sampled sequence.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<LstmStepState>,
}

/// Recurrent sequence policy with trainable first input.
///
/// Parameter layout (flat): `w_ih (4H x K) | w_hh (4H x H) | bias (4H) |
/// w_out (K x H) | b_out (K) | first_input (K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmPolicy {
    k: usize,
    hidden: usize,
    scale: f64,
    w_ih: Vec<f64>,
    w_hh: Vec<f64>,
    bias: Vec<f64>,
    w_out: Vec<f64>,
    b_out: Vec<f64>,
    first_input: Vec<f64>,
}

impl LstmPolicy {
    /// New policy over `k` TFs with all parameters drawn uniformly from
    /// `[-0.1, 0.1]`.
    pub fn new(k: usize, hidden: usize, scale: f64, rng: &mut RandomSource) -> Self {
        assert!(k > 0, "a policy needs at least one TF");
        assert!(hidden > 0, "hidden width must be positive");
        assert!(scale > 0.0, "logit scale must be positive");
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.uniform_in(-0.1, 0.1)).collect()
        };
        Self {
            k,
            hidden,
            scale,
            w_ih: draw(4 * hidden * k),
            w_hh: draw(4 * hidden * hidden),
            bias: draw(4 * hidden),
            w_out: draw(k * hidden),
            b_out: draw(k),
            first_input: draw(k),
        }
    }

    /// Rebuilds a policy from checkpointed flat parameters. The shape
    /// arguments must describe a valid policy (see [`LstmPolicy::new`]).
    pub fn from_params(
        k: usize,
        hidden: usize,
        scale: f64,
        params: &[f64],
    ) -> Result<Self, GeneratorError> {
        let mut policy = Self::new(k, hidden, scale, &mut RandomSource::new(0));
        policy.set_params_flat(params)?;
        Ok(policy)
    }

    pub fn tf_count(&self) -> usize {
        self.k
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden
    }

    pub fn logit_scale(&self) -> f64 {
        self.scale
    }

    /// One cell step: returns the cached state and the step's logits.
    fn forward_step(&self, input: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (LstmStepState, Vec<f64>) {
        let h = self.hidden;
        let mut pre = self.bias.clone();
        matvec_acc(&self.w_ih, 4 * h, self.k, input, &mut pre);
        matvec_acc(&self.w_hh, 4 * h, h, h_prev, &mut pre);

        let gate_i: Vec<f64> = pre[..h].iter().map(|&z| sigmoid(z)).collect();
        let gate_f: Vec<f64> = pre[h..2 * h].iter().map(|&z| sigmoid(z)).collect();
        let gate_g: Vec<f64> = pre[2 * h..3 * h].iter().map(|&z| z.tanh()).collect();
        let gate_o: Vec<f64> = pre[3 * h..].iter().map(|&z| sigmoid(z)).collect();

        let cell: Vec<f64> = (0..h)
            .map(|j| gate_f[j] * c_prev[j] + gate_i[j] * gate_g[j])
            .collect();
        let hidden: Vec<f64> = (0..h).map(|j| gate_o[j] * cell[j].tanh()).collect();

        let mut proj = self.b_out.clone();
        matvec_acc(&self.w_out, self.k, h, &hidden, &mut proj);
        let logits: Vec<f64> = proj.iter().map(|&u| self.scale * u.tanh()).collect();

        let state = LstmStepState {
            input: input.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            cell,
            hidden,
            proj,
        };
        (state, logits)
    }

    pub fn sample_sequence(&self, len: usize, rng: &mut RandomSource) -> SampledSequence {
        let mut ids = Vec::with_capacity(len);
        let mut step_probs = Vec::with_capacity(len);
        let mut step_log_probs = Vec::with_capacity(len);
        let mut steps = Vec::with_capacity(len);

        let mut input = self.first_input.clone();
        let mut h = vec![0.0; self.hidden];
        let mut c = vec![0.0; self.hidden];
        for _ in 0..len {
            let (state, logits) = self.forward_step(&input, &h, &c);
            let probs = softmax(&logits);
            let choice = sample_categorical(&probs, rng);

            ids.push(choice + 1);
            step_log_probs.push(probs[choice].ln());
            step_probs.push(probs);
            h = state.hidden.clone();
            c = state.cell.clone();
            steps.push(state);

            input = vec![0.0; self.k];
            input[choice] = 1.0;
        }
        SampledSequence {
            sequence: TfSequence::new(ids),
            step_probs,
            step_log_probs,
            trace: Some(LstmTrace { steps }),
        }
    }

    /// Backpropagation through time for
    /// `sum_t weights[t] * log pi(tau_t | recurrent state)`.
    pub fn grad_log_policy(
        &self,
        sampled: &SampledSequence,
        weights: &[f64],
    ) -> Result<GradientAccumulator, GeneratorError> {
        let trace = sampled
            .trace
            .as_ref()
            .ok_or(GeneratorError::MissingTrace)?;
        let (k, h) = (self.k, self.hidden);

        let mut gw_ih = vec![0.0; 4 * h * k];
        let mut gw_hh = vec![0.0; 4 * h * h];
        let mut gbias = vec![0.0; 4 * h];
        let mut gw_out = vec![0.0; k * h];
        let mut gb_out = vec![0.0; k];
        let mut gfirst = vec![0.0; k];

        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];

        for t in (0..trace.steps.len()).rev() {
            let step = &trace.steps[t];
            let id = sampled.sequence.ids[t];
            if id == 0 || id > k {
                return Err(GeneratorError::IdRange { step: t, id, k });
            }
            let probs = &sampled.step_probs[t];
            let w = weights[t];

            // d/dlogits of w * log softmax(logits)[chosen].
            let mut dlogits: Vec<f64> = probs.iter().map(|&p| -w * p).collect();
            dlogits[id - 1] += w;

            // Through logits = scale * tanh(proj).
            let dproj: Vec<f64> = dlogits
                .iter()
                .zip(&step.proj)
                .map(|(&dl, &u)| {
                    let th = u.tanh();
                    dl * self.scale * (1.0 - th * th)
                })
                .collect();
            outer_acc(&mut gw_out, &dproj, &step.hidden);
            for (g, d) in gb_out.iter_mut().zip(&dproj) {
                *g += d;
            }

            // dh collects the projection pull plus the next step's recurrence.
            let mut dh = dh_next.clone();
            matvec_transpose_acc(&self.w_out, k, h, &dproj, &mut dh);

            // Through h = o * tanh(c) and c = f * c_prev + i * g.
            let mut dpre = vec![0.0; 4 * h];
            let mut dc_prev = vec![0.0; h];
            for j in 0..h {
                let tc = step.cell[j].tanh();
                let do_ = dh[j] * tc;
                let dc = dc_next[j] + dh[j] * step.gate_o[j] * (1.0 - tc * tc);

                let di = dc * step.gate_g[j];
                let df = dc * step.c_prev[j];
                let dg = dc * step.gate_i[j];
                dc_prev[j] = dc * step.gate_f[j];

                let (i_, f_, g_, o_) = (
                    step.gate_i[j],
                    step.gate_f[j],
                    step.gate_g[j],
                    step.gate_o[j],
                );
                dpre[j] = di * i_ * (1.0 - i_);
                dpre[h + j] = df * f_ * (1.0 - f_);
                dpre[2 * h + j] = dg * (1.0 - g_ * g_);
                dpre[3 * h + j] = do_ * o_ * (1.0 - o_);
            }

            outer_acc(&mut gw_ih, &dpre, &step.input);
            outer_acc(&mut gw_hh, &dpre, &step.h_prev);
            for (g, d) in gbias.iter_mut().zip(&dpre) {
                *g += d;
            }

            dh_next = vec![0.0; h];
            matvec_transpose_acc(&self.w_hh, 4 * h, h, &dpre, &mut dh_next);
            dc_next = dc_prev;

            if t == 0 {
                matvec_transpose_acc(&self.w_ih, 4 * h, k, &dpre, &mut gfirst);
            }
        }

        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend(gw_ih);
        flat.extend(gw_hh);
        flat.extend(gbias);
        flat.extend(gw_out);
        flat.extend(gb_out);
        flat.extend(gfirst);
        Ok(GradientAccumulator::from_values(flat))
    }

    /// Flat parameter count for a policy over `k` TFs with `hidden` units:
    /// the four-gate input and recurrent weights, gate biases, output
    /// projection, and the trainable first input.
    pub fn expected_param_count(k: usize, hidden: usize) -> usize {
        let h = hidden;
        4 * h * k + 4 * h * h + 4 * h + k * h + k + k
    }

    pub fn param_count(&self) -> usize {
        Self::expected_param_count(self.k, self.hidden)
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend(&self.w_ih);
        flat.extend(&self.w_hh);
        flat.extend(&self.bias);
        flat.extend(&self.w_out);
        flat.extend(&self.b_out);
        flat.extend(&self.first_input);
        flat
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<(), GeneratorError> {
        if params.len() != self.param_count() {
            return Err(GeneratorError::ParamLength {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let (k, h) = (self.k, self.hidden);
        let mut offset = 0;
        let mut take = |n: usize| {
            let s = &params[offset..offset + n];
            offset += n;
            s.to_vec()
        };
        self.w_ih = take(4 * h * k);
        self.w_hh = take(4 * h * h);
        self.bias = take(4 * h);
        self.w_out = take(k * h);
        self.b_out = take(k);
        self.first_input = take(k);
        Ok(())
    }

    /// Log-probability of re-walking `ids` from scratch with current
    /// parameters, weighted per step. Used by tests to check the gradients.
    pub fn weighted_log_prob(&self, ids: &[usize], weights: &[f64]) -> f64 {
        assert_eq!(ids.len(), weights.len());
        let mut input = self.first_input.clone();
        let mut h = vec![0.0; self.hidden];
        let mut c = vec![0.0; self.hidden];
        let mut total = 0.0;
        for (&id, &w) in ids.iter().zip(weights) {
            let (state, logits) = self.forward_step(&input, &h, &c);
            let probs = softmax(&logits);
            total += w * probs[id - 1].ln();
            h = state.hidden;
            c = state.cell;
            input = vec![0.0; self.k];
            input[id - 1] = 1.0;
        }
        total
    }
}
