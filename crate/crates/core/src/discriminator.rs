//! Null-class discriminators: a frozen analytic oracle and a trainable MLP.
//!
//! A discriminator maps a point to the probability that it belongs to the
//! real data distribution (as opposed to the null class), plus a feature
//! vector usable as an embedding space for diversity distances. Probabilities
//! are clamped to `[eps, 1 - eps]` so the log-losses built on them stay
//! finite.

use thiserror::Error;

use crate::generator::{GradientAccumulator, MomentumSgd};
use crate::linalg::matvec;
use crate::point::DataPoint;
use crate::rng::RandomSource;

/// Slope of the leaky rectifier used by every hidden layer in this crate.
pub const LEAKY_SLOPE: f64 = 0.2;

pub(crate) fn leaky_relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

pub(crate) fn leaky_relu_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Clamps a probability into `[eps, 1 - eps]`.
pub fn clamp_prob(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

/// A discriminator verdict: clamped real-class probability plus features.
#[derive(Debug, Clone)]
pub struct DiscriminatorOutput {
    pub prob: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum DiscriminatorError {
    #[error("the {which} batch is empty")]
    EmptyBatch { which: &'static str },
    #[error("input has dimension {got}, discriminator expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { expected: usize, got: usize },
}

/// Analytic oracle: a point is real iff it lies strictly inside the ball of
/// the given radius. Its feature vector is the raw input itself.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleDiscriminator {
    pub radius: f64,
}

impl OracleDiscriminator {
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite());
        Self { radius }
    }

    pub fn predict(&self, x: &DataPoint, eps: f64) -> DiscriminatorOutput {
        let prob = if x.norm() < self.radius { 1.0 - eps } else { eps };
        DiscriminatorOutput {
            prob,
            features: x.values.clone(),
        }
    }
}

/// Two-layer perceptron: `input -> hidden (leaky ReLU) -> logistic scalar`.
///
/// Parameter layout (flat): `w1 (hidden x input) | b1 (hidden) | w2 (hidden) | b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpDiscriminator {
    input_dim: usize,
    hidden: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

/// Cached forward pass of the MLP on one point.
struct MlpForward {
    z1: Vec<f64>,
    a1: Vec<f64>,
    p_raw: f64,
}

impl MlpDiscriminator {
    /// Fresh discriminator with parameters drawn uniformly from `[-0.1, 0.1]`.
    pub fn new(input_dim: usize, hidden: usize, rng: &mut RandomSource) -> Self {
        assert!(input_dim > 0 && hidden > 0);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.uniform_in(-0.1, 0.1)).collect()
        };
        Self {
            input_dim,
            hidden,
            w1: draw(hidden * input_dim),
            b1: draw(hidden),
            w2: draw(hidden),
            b2: rng.uniform_in(-0.1, 0.1),
        }
    }

    /// Rebuilds a discriminator from checkpointed flat parameters.
    pub fn from_params(
        input_dim: usize,
        hidden: usize,
        params: &[f64],
    ) -> Result<Self, DiscriminatorError> {
        let mut disc = Self::new(input_dim, hidden, &mut RandomSource::new(0));
        disc.set_params_flat(params)?;
        Ok(disc)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden
    }

    fn forward(&self, x: &[f64]) -> MlpForward {
        let mut z1 = matvec(&self.w1, self.hidden, self.input_dim, x);
        for (z, b) in z1.iter_mut().zip(&self.b1) {
            *z += b;
        }
        let a1: Vec<f64> = z1.iter().map(|&z| leaky_relu(z)).collect();
        let z2 = self.w2.iter().zip(&a1).map(|(w, a)| w * a).sum::<f64>() + self.b2;
        MlpForward {
            z1,
            a1,
            p_raw: sigmoid(z2),
        }
    }

    pub fn predict(&self, x: &DataPoint, eps: f64) -> DiscriminatorOutput {
        debug_assert_eq!(x.dim(), self.input_dim);
        let fwd = self.forward(&x.values);
        DiscriminatorOutput {
            prob: clamp_prob(fwd.p_raw, eps),
            features: fwd.a1,
        }
    }

    /// Gradient of `upstream * prob(x)` in the flat parameters, where `prob`
    /// is the clamped output. Inside the clamp region the output is constant,
    /// so the gradient there is exactly zero.
    pub fn backward(&self, x: &DataPoint, upstream: f64, eps: f64) -> GradientAccumulator {
        debug_assert_eq!(x.dim(), self.input_dim);
        let mut grad = GradientAccumulator::zeros(self.param_count());
        self.backward_into(&x.values, upstream, eps, &mut grad);
        grad
    }

    fn backward_into(&self, x: &[f64], upstream: f64, eps: f64, grad: &mut GradientAccumulator) {
        let fwd = self.forward(x);
        let clamped = fwd.p_raw < eps || fwd.p_raw > 1.0 - eps;
        if clamped {
            return;
        }
        let dz2 = upstream * fwd.p_raw * (1.0 - fwd.p_raw);

        let (h, d) = (self.hidden, self.input_dim);
        let flat = grad_slices_mut(grad, h, d);
        // dz1 = w2 * dz2 masked by the rectifier slope.
        for j in 0..h {
            let dz1 = self.w2[j] * dz2 * leaky_relu_grad(fwd.z1[j]);
            for (w, xv) in flat.w1[j * d..(j + 1) * d].iter_mut().zip(x) {
                *w += dz1 * xv;
            }
            flat.b1[j] += dz1;
            flat.w2[j] += dz2 * fwd.a1[j];
        }
        *flat.b2 += dz2;
    }

    pub fn param_count(&self) -> usize {
        self.hidden * self.input_dim + self.hidden + self.hidden + 1
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend(&self.w1);
        flat.extend(&self.b1);
        flat.extend(&self.w2);
        flat.push(self.b2);
        flat
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<(), DiscriminatorError> {
        if params.len() != self.param_count() {
            return Err(DiscriminatorError::ParamLength {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let (h, d) = (self.hidden, self.input_dim);
        self.w1 = params[..h * d].to_vec();
        self.b1 = params[h * d..h * d + h].to_vec();
        self.w2 = params[h * d + h..h * d + 2 * h].to_vec();
        self.b2 = params[h * d + 2 * h];
        Ok(())
    }
}

/// Mutable views into the flat gradient, mirroring the parameter layout.
struct GradSlices<'a> {
    w1: &'a mut [f64],
    b1: &'a mut [f64],
    w2: &'a mut [f64],
    b2: &'a mut f64,
}

fn grad_slices_mut(grad: &mut GradientAccumulator, hidden: usize, dim: usize) -> GradSlices<'_> {
    let (w1, rest) = grad.values_mut().split_at_mut(hidden * dim);
    let (b1, rest) = rest.split_at_mut(hidden);
    let (w2, rest) = rest.split_at_mut(hidden);
    GradSlices {
        w1,
        b1,
        w2,
        b2: &mut rest[0],
    }
}

/// Either discriminator behind one interface.
#[derive(Debug, Clone)]
pub enum Discriminator {
    Oracle(OracleDiscriminator),
    Mlp(MlpDiscriminator),
}

impl Discriminator {
    /// Model class tag used in checkpoints.
    pub fn kind(&self) -> &'static str {
        match self {
            Discriminator::Oracle(_) => "oracle",
            Discriminator::Mlp(_) => "mlp",
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, Discriminator::Mlp(_))
    }

    pub fn predict(&self, x: &DataPoint, eps: f64) -> DiscriminatorOutput {
        match self {
            Discriminator::Oracle(o) => o.predict(x, eps),
            Discriminator::Mlp(m) => m.predict(x, eps),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Discriminator::Oracle(_) => 0,
            Discriminator::Mlp(m) => m.param_count(),
        }
    }

    pub fn params_flat(&self) -> Vec<f64> {
        match self {
            Discriminator::Oracle(_) => Vec::new(),
            Discriminator::Mlp(m) => m.params_flat(),
        }
    }

    /// The adversarial objective this model ascends:
    /// `mean log D(real) + mean log(1 - D(transformed))`.
    pub fn gan_objective(
        &self,
        real: &[DataPoint],
        transformed: &[DataPoint],
        eps: f64,
    ) -> Result<f64, DiscriminatorError> {
        if real.is_empty() {
            return Err(DiscriminatorError::EmptyBatch { which: "real" });
        }
        if transformed.is_empty() {
            return Err(DiscriminatorError::EmptyBatch {
                which: "transformed",
            });
        }
        let real_term = real
            .iter()
            .map(|x| self.predict(x, eps).prob.ln())
            .sum::<f64>()
            / real.len() as f64;
        let fake_term = transformed
            .iter()
            .map(|x| (1.0 - self.predict(x, eps).prob).ln())
            .sum::<f64>()
            / transformed.len() as f64;
        Ok(real_term + fake_term)
    }

    /// One ascent step on the adversarial objective over the given batches,
    /// returning the pre-step objective value.
    ///
    /// The oracle has nothing to train: its parameters never move and the
    /// value it reports — its per-point self-objective
    /// `log D(x) + log(1 - D(x)) = log(eps (1 - eps))` — does not depend on
    /// the batches at all, so it is constant across a whole run.
    pub fn update(
        &mut self,
        opt: &mut MomentumSgd,
        real: &[DataPoint],
        transformed: &[DataPoint],
        lr: f64,
        momentum: f64,
        eps: f64,
    ) -> Result<f64, DiscriminatorError> {
        if real.is_empty() {
            return Err(DiscriminatorError::EmptyBatch { which: "real" });
        }
        if transformed.is_empty() {
            return Err(DiscriminatorError::EmptyBatch {
                which: "transformed",
            });
        }
        match self {
            Discriminator::Oracle(_) => Ok((eps * (1.0 - eps)).ln()),
            Discriminator::Mlp(mlp) => {
                for x in real.iter().chain(transformed) {
                    if x.dim() != mlp.input_dim {
                        return Err(DiscriminatorError::DimensionMismatch {
                            expected: mlp.input_dim,
                            got: x.dim(),
                        });
                    }
                }
                let objective = self.gan_objective(real, transformed, eps)?;
                let Discriminator::Mlp(mlp) = self else {
                    unreachable!()
                };
                // Descend -objective: d(-J)/dprob is -1/p on real points and
                // +1/(1-p) on transformed ones, averaged per batch.
                let mut grad = GradientAccumulator::zeros(mlp.param_count());
                for x in real {
                    let p = mlp.predict(x, eps).prob;
                    mlp.backward_into(&x.values, -1.0 / (p * real.len() as f64), eps, &mut grad);
                }
                for x in transformed {
                    let p = mlp.predict(x, eps).prob;
                    mlp.backward_into(
                        &x.values,
                        1.0 / ((1.0 - p) * transformed.len() as f64),
                        eps,
                        &mut grad,
                    );
                }
                let mut params = mlp.params_flat();
                opt.step(&mut params, grad.values(), lr, momentum);
                mlp.set_params_flat(&params)?;
                Ok(objective)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-6;

    #[test]
    fn oracle_is_strict_at_the_boundary() {
        let oracle = OracleDiscriminator::new(1.0);
        let inside = DataPoint::new(vec![0.3, 0.4]);
        let boundary = DataPoint::new(vec![1.0, 0.0]);
        let outside = DataPoint::new(vec![1.1, 0.0]);
        assert_eq!(oracle.predict(&inside, EPS).prob, 1.0 - EPS);
        assert_eq!(oracle.predict(&boundary, EPS).prob, EPS);
        assert_eq!(oracle.predict(&outside, EPS).prob, EPS);
    }

    #[test]
    fn oracle_features_are_the_raw_input() {
        let oracle = OracleDiscriminator::new(1.0);
        let x = DataPoint::new(vec![0.1, -0.2]);
        assert_eq!(oracle.predict(&x, EPS).features, x.values);
    }

    #[test]
    fn clamping_brackets_fresh_mlp_outputs() {
        let mut rng = RandomSource::new(8);
        let mlp = MlpDiscriminator::new(2, 16, &mut rng);
        for i in 0..50 {
            let x = DataPoint::new(vec![(i as f64) * 37.0 - 900.0, (i as f64) * -11.0]);
            let p = mlp.predict(&x, EPS).prob;
            assert!((EPS..=1.0 - EPS).contains(&p));
        }
    }

    #[test]
    fn equal_batches_with_a_flat_mlp_score_minus_two_ln_two() {
        // Zero last layer: z2 = 0 regardless of input, so D == 0.5 and the
        // objective is ln(1/2) + ln(1/2) = -2 ln 2 on any pair of batches.
        let mut rng = RandomSource::new(2);
        let mut mlp = MlpDiscriminator::new(2, 8, &mut rng);
        let h = mlp.hidden_width();
        let mut params = mlp.params_flat();
        let n = params.len();
        for v in &mut params[n - h - 1..] {
            *v = 0.0;
        }
        mlp.set_params_flat(&params).unwrap();
        let disc = Discriminator::Mlp(mlp);
        let batch = vec![
            DataPoint::new(vec![0.1, 0.2]),
            DataPoint::new(vec![-0.4, 0.5]),
        ];
        let j = disc.gan_objective(&batch, &batch, EPS).unwrap();
        assert!((j - (-2.0 * 2.0_f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_reports_loss_but_moves_nothing() {
        let mut rng = RandomSource::new(3);
        let mut disc = Discriminator::Mlp(MlpDiscriminator::new(2, 8, &mut rng));
        let mut opt = MomentumSgd::new(disc.param_count());
        let before = disc.params_flat();
        let real = vec![DataPoint::new(vec![0.1, 0.0])];
        let fake = vec![DataPoint::new(vec![2.0, 0.0])];
        let loss = disc
            .update(&mut opt, &real, &fake, 0.0, 0.9, EPS)
            .unwrap();
        assert!(loss.is_finite());
        assert_eq!(disc.params_flat(), before);
    }

    #[test]
    fn small_updates_improve_the_objective_on_a_frozen_batch() {
        for seed in 0..20 {
            let mut rng = RandomSource::new(seed);
            let mut disc = Discriminator::Mlp(MlpDiscriminator::new(2, 8, &mut rng));
            let mut opt = MomentumSgd::new(disc.param_count());
            let real: Vec<DataPoint> = (0..6)
                .map(|_| DataPoint::new(vec![rng.uniform_in(-0.5, 0.5), rng.uniform_in(-0.5, 0.5)]))
                .collect();
            let fake: Vec<DataPoint> = (0..6)
                .map(|_| DataPoint::new(vec![rng.uniform_in(1.0, 2.0), rng.uniform_in(-2.0, -1.0)]))
                .collect();
            let before = disc
                .update(&mut opt, &real, &fake, 1e-3, 0.0, EPS)
                .unwrap();
            let after = disc.gan_objective(&real, &fake, EPS).unwrap();
            // Ascending the objective means the post-step value cannot drop.
            assert!(
                after >= before - 1e-12,
                "seed {seed}: {before} -> {after}"
            );
        }
    }

    #[test]
    fn oracle_update_is_a_no_op_with_a_constant_report() {
        let mut disc = Discriminator::Oracle(OracleDiscriminator::new(1.0));
        let mut opt = MomentumSgd::new(0);
        let real = vec![DataPoint::new(vec![0.0, 0.0])];
        let near = vec![DataPoint::new(vec![0.5, 0.0])];
        let far = vec![DataPoint::new(vec![5.0, 0.0])];
        let a = disc.update(&mut opt, &real, &near, 0.5, 0.9, EPS).unwrap();
        let b = disc.update(&mut opt, &real, &far, 0.5, 0.9, EPS).unwrap();
        assert_eq!(a, b);
        assert!((a - (EPS * (1.0 - EPS)).ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_batches_are_rejected() {
        let mut disc = Discriminator::Oracle(OracleDiscriminator::new(1.0));
        let mut opt = MomentumSgd::new(0);
        let x = vec![DataPoint::new(vec![0.0, 0.0])];
        assert!(matches!(
            disc.update(&mut opt, &[], &x, 0.1, 0.9, EPS),
            Err(DiscriminatorError::EmptyBatch { which: "real" })
        ));
        assert!(matches!(
            disc.update(&mut opt, &x, &[], 0.1, 0.9, EPS),
            Err(DiscriminatorError::EmptyBatch { .. })
        ));
    }

    #[test]
    fn backward_matches_central_finite_differences() {
        let mut rng = RandomSource::new(77);
        let mlp = MlpDiscriminator::new(3, 5, &mut rng);
        let x = DataPoint::new(vec![0.4, -0.7, 1.1]);
        let upstream = 1.3;
        let grad = mlp.backward(&x, upstream, EPS);

        let h = 1e-5;
        let base = mlp.params_flat();
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus[i] += h;
            let mut minus = base.clone();
            minus[i] -= h;
            let f = |p: &[f64]| {
                upstream
                    * MlpDiscriminator::from_params(3, 5, p)
                        .unwrap()
                        .predict(&x, EPS)
                        .prob
            };
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let a = grad.values()[i];
            assert!(
                (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6) < 1e-4,
                "param {i}: analytic {a} vs fd {fd}"
            );
        }
    }
}
