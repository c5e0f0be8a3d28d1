//! Downstream classifier trained on policy-augmented data.
//!
//! This is the consumer that augmentation is supposed to help: a one-hidden-
//! layer perceptron trained with cross-entropy on labeled points that are,
//! with some probability, replaced by a transformed copy. An optional
//! consistency penalty pulls the pre-softmax logits of an unlabeled point and
//! its transformed copy together, making the classifier invariant to the
//! learned transformations. The last few epochs always run on clean data so
//! the final decision boundary is fit to the true input distribution.

use thiserror::Error;

use crate::discriminator::{leaky_relu, leaky_relu_grad};
use crate::generator::{Generator, GradientAccumulator, MomentumSgd};
use crate::point::DataPoint;
use crate::rng::RandomSource;
use crate::tf::{RegistryError, TfRegistry};

#[derive(Debug, Error)]
pub enum EndModelError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("classifier training requires labeled data")]
    NoLabeledData,
    #[error("label {label} is out of range for {classes} classes")]
    LabelRange { label: usize, classes: usize },
    #[error("the consistency penalty requires unlabeled data")]
    NoUnlabeledData,
}

/// Hyperparameters of the downstream training run.
#[derive(Debug, Clone)]
pub struct EndModelConfig {
    pub hidden: usize,
    pub classes: usize,
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Probability that a labeled point is replaced by a transformed copy.
    pub p_transform: f64,
    /// Trailing epochs trained with transformations switched off entirely.
    pub final_clean_epochs: usize,
    /// Weight of the logit-consistency penalty on unlabeled data.
    pub tr_weight: f64,
    /// Size of the unlabeled sub-batch, as a fraction of the labeled batch.
    pub tr_fraction: f64,
    pub seed: u64,
}

impl Default for EndModelConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            classes: 2,
            lr: 0.1,
            momentum: 0.9,
            epochs: 30,
            batch_size: 16,
            p_transform: 1.0,
            final_clean_epochs: 10,
            tr_weight: 0.1,
            tr_fraction: 0.2,
            seed: 0,
        }
    }
}

/// The augmentation policy handed to the classifier: a trained (or uniform)
/// generator, the registry it indexes into, and the sequence length.
pub struct AugmentationPolicy<'a> {
    pub generator: &'a Generator,
    pub registry: &'a TfRegistry,
    pub sequence_length: usize,
}

impl AugmentationPolicy<'_> {
    fn transform(
        &self,
        x: &DataPoint,
        rng: &mut RandomSource,
    ) -> Result<DataPoint, RegistryError> {
        let sampled = self.generator.sample_sequence(self.sequence_length, rng);
        let traj = self.registry.apply_sequence(&sampled.sequence, x, rng)?;
        Ok(traj.final_point().clone())
    }
}

/// One-hidden-layer softmax classifier with a leaky-ReLU hidden layer.
///
/// Parameter layout (flat): `w1 (hidden x input) | b1 | w2 (classes x hidden) | b2`.
#[derive(Debug, Clone)]
pub struct Classifier {
    input_dim: usize,
    hidden: usize,
    classes: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Cached forward pass on one point.
struct ClfForward {
    z1: Vec<f64>,
    a1: Vec<f64>,
    logits: Vec<f64>,
}

impl Classifier {
    /// Fresh classifier with parameters drawn uniformly from `[-0.1, 0.1]`.
    pub fn new(input_dim: usize, hidden: usize, classes: usize, rng: &mut RandomSource) -> Self {
        assert!(input_dim > 0 && hidden > 0 && classes >= 2);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.uniform_in(-0.1, 0.1)).collect()
        };
        Self {
            input_dim,
            hidden,
            classes,
            w1: draw(hidden * input_dim),
            b1: draw(hidden),
            w2: draw(classes * hidden),
            b2: draw(classes),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn forward(&self, x: &[f64]) -> ClfForward {
        debug_assert_eq!(x.len(), self.input_dim);
        let mut z1 = self.b1.clone();
        for j in 0..self.hidden {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            z1[j] += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        let a1: Vec<f64> = z1.iter().map(|&z| leaky_relu(z)).collect();
        let mut logits = self.b2.clone();
        for c in 0..self.classes {
            let row = &self.w2[c * self.hidden..(c + 1) * self.hidden];
            logits[c] += row.iter().zip(&a1).map(|(w, a)| w * a).sum::<f64>();
        }
        ClfForward { z1, a1, logits }
    }

    /// Pre-softmax logits for one point.
    pub fn logits(&self, x: &DataPoint) -> Vec<f64> {
        self.forward(&x.values).logits
    }

    /// Predicted class: argmax of the logits, ties resolved to the lowest
    /// index.
    pub fn predict(&self, x: &DataPoint) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (c, &l) in logits.iter().enumerate().skip(1) {
            if l > logits[best] {
                best = c;
            }
        }
        best
    }

    pub fn param_count(&self) -> usize {
        self.hidden * self.input_dim + self.hidden + self.classes * self.hidden + self.classes
    }

    fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        flat.extend(&self.w1);
        flat.extend(&self.b1);
        flat.extend(&self.w2);
        flat.extend(&self.b2);
        flat
    }

    fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let (w1, rest) = params.split_at(self.hidden * self.input_dim);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.classes * self.hidden);
        self.w1.copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2.copy_from_slice(b2);
    }

    /// Accumulates the parameter gradient of `sum_c dlogits[c] * logits[c]`
    /// for the forward pass `fwd` on input `x`.
    fn backward_into(
        &self,
        x: &[f64],
        fwd: &ClfForward,
        dlogits: &[f64],
        grad: &mut GradientAccumulator,
    ) {
        let d = self.input_dim;
        let h = self.hidden;
        let c_n = self.classes;
        let values = grad.values_mut();
        let (gw1, rest) = values.split_at_mut(h * d);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(c_n * h);

        let mut da1 = vec![0.0; h];
        for c in 0..c_n {
            let dc = dlogits[c];
            gb2[c] += dc;
            for j in 0..h {
                gw2[c * h + j] += dc * fwd.a1[j];
                da1[j] += self.w2[c * h + j] * dc;
            }
        }
        for j in 0..h {
            let dz1 = da1[j] * leaky_relu_grad(fwd.z1[j]);
            gb1[j] += dz1;
            for (i, &xi) in x.iter().enumerate() {
                gw1[j * d + i] += dz1 * xi;
            }
        }
    }
}

fn softmax_stable(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Euclidean distance between two logit vectors — the consistency penalty
/// for one unlabeled point and its transformed copy.
pub fn logit_consistency(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-epoch record of a downstream training run.
#[derive(Debug, Clone)]
pub struct TrainLog {
    /// Transformation probability actually used in each epoch (0 in the
    /// trailing clean epochs).
    pub epoch_p_transform: Vec<f64>,
    /// Mean cross-entropy per epoch.
    pub train_loss: Vec<f64>,
    /// Mean consistency penalty per epoch (0 when the term is inactive).
    pub consistency: Vec<f64>,
}

/// Trains a classifier with optional policy-driven augmentation.
///
/// Each labeled point in a batch is independently replaced, with probability
/// `p_transform`, by a transformed copy. When unlabeled data is supplied and
/// `tr_weight > 0`, every batch also descends the consistency penalty on a
/// fresh unlabeled sub-batch of `ceil(tr_fraction * batch)` points. Both
/// mechanisms are switched off for the trailing `final_clean_epochs` and
/// whenever no augmentation policy is given.
pub fn train_classifier(
    labeled: &[(DataPoint, usize)],
    unlabeled: &[DataPoint],
    augment: Option<&AugmentationPolicy<'_>>,
    cfg: &EndModelConfig,
) -> Result<(Classifier, TrainLog), EndModelError> {
    if labeled.is_empty() {
        return Err(EndModelError::NoLabeledData);
    }
    for (_, y) in labeled {
        if *y >= cfg.classes {
            return Err(EndModelError::LabelRange {
                label: *y,
                classes: cfg.classes,
            });
        }
    }
    let use_consistency = augment.is_some() && cfg.tr_weight > 0.0 && cfg.tr_fraction > 0.0;
    if use_consistency && unlabeled.is_empty() {
        return Err(EndModelError::NoUnlabeledData);
    }

    let input_dim = labeled[0].0.dim();
    let mut rng = RandomSource::new(cfg.seed);
    let mut clf = Classifier::new(input_dim, cfg.hidden, cfg.classes, &mut rng);
    let mut opt = MomentumSgd::new(clf.param_count());
    let mut log = TrainLog {
        epoch_p_transform: Vec::with_capacity(cfg.epochs),
        train_loss: Vec::with_capacity(cfg.epochs),
        consistency: Vec::with_capacity(cfg.epochs),
    };

    for epoch in 0..cfg.epochs {
        let clean = epoch + cfg.final_clean_epochs >= cfg.epochs;
        let p_t = if clean || augment.is_none() {
            0.0
        } else {
            cfg.p_transform
        };
        log.epoch_p_transform.push(p_t);

        let mut order: Vec<usize> = (0..labeled.len()).collect();
        rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut loss_n = 0.0f64;
        let mut cons_sum = 0.0;
        let mut cons_n = 0.0;

        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let mut grad = GradientAccumulator::zeros(clf.param_count());

            for &i in chunk {
                let (x, y) = &labeled[i];
                let input = if p_t > 0.0 && rng.uniform() < p_t {
                    augment
                        .expect("p_t > 0 only with a policy")
                        .transform(x, &mut rng)?
                } else {
                    x.clone()
                };
                let fwd = clf.forward(&input.values);
                let probs = softmax_stable(&fwd.logits);
                loss_sum -= probs[*y].max(f64::MIN_POSITIVE).ln();
                loss_n += 1.0;
                // d(cross-entropy)/d(logits) = softmax - onehot, averaged
                // over the batch.
                let mut dlogits = probs;
                dlogits[*y] -= 1.0;
                for dl in &mut dlogits {
                    *dl /= chunk.len() as f64;
                }
                clf.backward_into(&input.values, &fwd, &dlogits, &mut grad);
            }

            if use_consistency && p_t > 0.0 {
                let policy = augment.expect("consistency requires a policy");
                let sub = ((cfg.tr_fraction * chunk.len() as f64).ceil() as usize).max(1);
                for _ in 0..sub {
                    let u = &unlabeled[rng.index(unlabeled.len())];
                    let v = policy.transform(u, &mut rng)?;
                    let fwd_u = clf.forward(&u.values);
                    let fwd_v = clf.forward(&v.values);
                    let dist = logit_consistency(&fwd_u.logits, &fwd_v.logits);
                    cons_sum += dist;
                    cons_n += 1.0;
                    if dist > 0.0 {
                        // d‖a - b‖/da = (a - b)/‖a - b‖, and the negation
                        // for b; the whole term is weighted and averaged.
                        let scale = cfg.tr_weight / (dist * sub as f64);
                        let du: Vec<f64> = fwd_u
                            .logits
                            .iter()
                            .zip(&fwd_v.logits)
                            .map(|(a, b)| (a - b) * scale)
                            .collect();
                        let dv: Vec<f64> = du.iter().map(|g| -g).collect();
                        clf.backward_into(&u.values, &fwd_u, &du, &mut grad);
                        clf.backward_into(&v.values, &fwd_v, &dv, &mut grad);
                    }
                }
            }

            let mut params = clf.params_flat();
            opt.step(&mut params, grad.values(), cfg.lr, cfg.momentum);
            clf.set_params_flat(&params);
        }

        log.train_loss.push(loss_sum / loss_n.max(1.0));
        log.consistency.push(if cons_n > 0.0 { cons_sum / cons_n } else { 0.0 });
    }

    Ok((clf, log))
}

/// Fraction of test points the classifier labels correctly.
pub fn evaluate(clf: &Classifier, test: &[(DataPoint, usize)]) -> f64 {
    assert!(!test.is_empty(), "evaluation needs at least one point");
    let correct = test.iter().filter(|(x, y)| clf.predict(x) == *y).count();
    correct as f64 / test.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::MeanFieldPolicy;

    fn blob_data(n: usize, seed: u64) -> Vec<(DataPoint, usize)> {
        let mut rng = RandomSource::new(seed);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let cx = if label == 0 { -0.5 } else { 0.5 };
                let x = rng.normal(cx, 0.15);
                let y = rng.normal(0.0, 0.15);
                (DataPoint::new(vec![x, y]), label)
            })
            .collect()
    }

    fn identity_registry() -> TfRegistry {
        let mut reg = TfRegistry::new();
        reg.register("identity", |x: &DataPoint, _: &mut RandomSource| x.clone())
            .unwrap();
        reg
    }

    #[test]
    fn ties_resolve_to_the_lowest_class_index() {
        let mut rng = RandomSource::new(0);
        let mut clf = Classifier::new(2, 4, 3, &mut rng);
        // Zero everything: all logits identical, argmax must pick class 0.
        let zeros = vec![0.0; clf.param_count()];
        clf.set_params_flat(&zeros);
        assert_eq!(clf.predict(&DataPoint::new(vec![0.3, -0.8])), 0);
    }

    #[test]
    fn learns_two_separated_blobs() {
        let train = blob_data(120, 1);
        let test = blob_data(200, 2);
        let mut cfg = EndModelConfig::default();
        cfg.epochs = 25;
        cfg.final_clean_epochs = 5;
        cfg.seed = 3;
        let (clf, log) = train_classifier(&train, &[], None, &cfg).unwrap();
        let acc = evaluate(&clf, &test);
        assert!(acc > 0.9, "accuracy {acc}");
        assert_eq!(log.epoch_p_transform.len(), 25);
        let first = log.train_loss.first().unwrap();
        let last = log.train_loss.last().unwrap();
        assert!(last < first, "loss went {first} -> {last}");
    }

    #[test]
    fn trailing_epochs_run_clean() {
        let train = blob_data(32, 4);
        let reg = identity_registry();
        let gen = Generator::MeanField(MeanFieldPolicy::new(1));
        let policy = AugmentationPolicy {
            generator: &gen,
            registry: &reg,
            sequence_length: 2,
        };
        let unlabeled: Vec<DataPoint> = blob_data(16, 5).into_iter().map(|(x, _)| x).collect();
        let mut cfg = EndModelConfig::default();
        cfg.epochs = 8;
        cfg.final_clean_epochs = 3;
        cfg.seed = 6;
        let (_, log) = train_classifier(&train, &unlabeled, Some(&policy), &cfg).unwrap();
        assert_eq!(log.epoch_p_transform[..5], [1.0; 5]);
        assert_eq!(log.epoch_p_transform[5..], [0.0; 3]);
    }

    #[test]
    fn consistency_is_exactly_zero_under_the_identity_tf() {
        let train = blob_data(32, 7);
        let reg = identity_registry();
        let gen = Generator::MeanField(MeanFieldPolicy::new(1));
        let policy = AugmentationPolicy {
            generator: &gen,
            registry: &reg,
            sequence_length: 3,
        };
        let unlabeled: Vec<DataPoint> = blob_data(16, 8).into_iter().map(|(x, _)| x).collect();
        let mut cfg = EndModelConfig::default();
        cfg.epochs = 4;
        cfg.final_clean_epochs = 1;
        cfg.seed = 9;
        let (_, log) = train_classifier(&train, &unlabeled, Some(&policy), &cfg).unwrap();
        for &c in &log.consistency {
            assert_eq!(c, 0.0, "identity TF must produce zero penalty");
        }
    }

    #[test]
    fn consistency_requires_unlabeled_points() {
        let train = blob_data(8, 10);
        let reg = identity_registry();
        let gen = Generator::MeanField(MeanFieldPolicy::new(1));
        let policy = AugmentationPolicy {
            generator: &gen,
            registry: &reg,
            sequence_length: 1,
        };
        let cfg = EndModelConfig::default();
        let err = train_classifier(&train, &[], Some(&policy), &cfg).unwrap_err();
        assert!(matches!(err, EndModelError::NoUnlabeledData));
    }

    #[test]
    fn out_of_range_labels_are_rejected() {
        let train = vec![(DataPoint::new(vec![0.0, 0.0]), 5)];
        let cfg = EndModelConfig::default();
        let err = train_classifier(&train, &[], None, &cfg).unwrap_err();
        assert!(matches!(
            err,
            EndModelError::LabelRange { label: 5, classes: 2 }
        ));
    }

    #[test]
    fn logit_consistency_matches_hand_computation() {
        let d = logit_consistency(&[1.0, 2.0], &[4.0, 6.0]);
        assert!((d - 5.0).abs() < 1e-12);
        assert_eq!(logit_consistency(&[0.5, -0.5], &[0.5, -0.5]), 0.0);
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let train = blob_data(40, 11);
        let mut cfg = EndModelConfig::default();
        cfg.epochs = 6;
        cfg.final_clean_epochs = 2;
        cfg.seed = 12;
        let (a, _) = train_classifier(&train, &[], None, &cfg).unwrap();
        let (b, _) = train_classifier(&train, &[], None, &cfg).unwrap();
        for (x, y) in a.params_flat().iter().zip(&b.params_flat()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
