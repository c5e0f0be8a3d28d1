//! Policy-gradient training against a null-class discriminator.
//!
//! The generator's objective on one rollout is the cumulative loss
//! `loss_t = log(1 - D(state_t))`, whose per-step increments
//! `reward_t = loss_t - loss_{t-1}` telescope back to the total. Training
//! descends a score-function gradient estimate: each step's log-probability
//! gradient is weighted by its discounted reward-to-go minus a per-step batch
//! baseline. A second score-function estimate of the mean origin-to-final
//! distance implements the inverse-diversity penalty that keeps the policy
//! from collapsing onto do-nothing sequences.

pub mod metrics;

pub use metrics::{
    generalized_jaccard, mean_pairwise_jaccard, metrics_csv_header, metrics_csv_row,
    ngram_uniqueness, MetricsRow,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::checkpoint::Checkpoint;
use crate::config::{DistanceMetric, TrainingConfig};
use crate::discriminator::{Discriminator, DiscriminatorError};
use crate::generator::{
    Generator, GeneratorError, GradientAccumulator, MomentumSgd, SampledSequence,
};
use crate::point::DataPoint;
use crate::rng::RandomSource;
use crate::tf::{RegistryError, TfRegistry, TfSequence, Trajectory};

/// Floor applied to the squared mean diversity before inverting it, so the
/// diversity gradient stays bounded when sequences barely move the data.
pub const DIVERSITY_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Discriminator(#[from] DiscriminatorError),
    #[error("a policy-gradient batch needs at least 2 rollouts, got {0}")]
    BatchTooSmall(usize),
    #[error("reward tapes have mismatched lengths ({0} vs {1})")]
    RaggedTapes(usize, usize),
    #[error("training requires a non-empty dataset")]
    EmptyData,
}

/// Per-trajectory reward bookkeeping for the policy-gradient estimator.
#[derive(Debug, Clone, Default)]
pub struct RewardTape {
    /// Cumulative losses `log(1 - D(state))`; index 0 is the origin, so the
    /// tape has one more entry than the sequence has steps.
    pub losses: Vec<f64>,
    /// Incremental rewards: consecutive differences of `losses`.
    pub rewards: Vec<f64>,
    /// Discounted suffix sums of `rewards`.
    pub to_go: Vec<f64>,
    /// `to_go` minus the per-step batch baseline.
    pub advantages: Vec<f64>,
}

/// Evaluates the cumulative losses along a trajectory: the origin first,
/// then every intermediate state.
pub fn cumulative_losses(traj: &Trajectory, disc: &Discriminator, eps: f64) -> Vec<f64> {
    std::iter::once(&traj.origin)
        .chain(&traj.states)
        .map(|x| (1.0 - disc.predict(x, eps).prob).ln())
        .collect()
}

/// Consecutive differences of a cumulative-loss tape. The increments
/// telescope: their sum is exactly `losses.last() - losses[0]`.
pub fn incremental_rewards(losses: &[f64]) -> Vec<f64> {
    assert!(!losses.is_empty(), "a loss tape has at least the origin entry");
    losses.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Discounted reward-to-go: `to_go[t] = reward[t] + discount * to_go[t+1]`.
pub fn rewards_to_go(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, &r) in rewards.iter().enumerate().rev() {
        acc = r + discount * acc;
        out[t] = acc;
    }
    out
}

/// Per-step mean of the reward-to-go arrays across a batch of trajectories.
pub fn batch_baseline(to_gos: &[&[f64]]) -> Result<Vec<f64>, TrainingError> {
    let first = to_gos.first().map(|t| t.len()).unwrap_or(0);
    for t in to_gos {
        if t.len() != first {
            return Err(TrainingError::RaggedTapes(first, t.len()));
        }
    }
    let mut mean = vec![0.0; first];
    for tape in to_gos {
        for (m, v) in mean.iter_mut().zip(*tape) {
            *m += v;
        }
    }
    let n = to_gos.len().max(1) as f64;
    for m in &mut mean {
        *m /= n;
    }
    Ok(mean)
}

/// One complete rollout of one sampled sequence on one data point.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub sampled: SampledSequence,
    pub trajectory: Trajectory,
    pub tape: RewardTape,
    /// Origin-to-final distance in the configured metric space.
    pub diversity: f64,
    /// Discriminator probability of the final point.
    pub final_prob: f64,
}

fn diversity_distance(
    disc: &Discriminator,
    origin: &DataPoint,
    final_point: &DataPoint,
    metric: DistanceMetric,
    eps: f64,
) -> f64 {
    match metric {
        DistanceMetric::RawInput => origin.distance(final_point),
        DistanceMetric::Feature => {
            let a = disc.predict(origin, eps).features;
            let b = disc.predict(final_point, eps).features;
            a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        }
    }
}

/// Rolls out `m` sequences per data point, in parallel, with one pre-split
/// random stream per rollout so the result does not depend on scheduling.
/// Reward-to-go and advantages are left for [`finalize_advantages`].
pub fn rollout_batch(
    gen: &Generator,
    disc: &Discriminator,
    registry: &TfRegistry,
    points: &[DataPoint],
    m: usize,
    sequence_length: usize,
    eps: f64,
    metric: DistanceMetric,
    rng: &mut RandomSource,
) -> Result<Vec<Rollout>, TrainingError> {
    let mut jobs = Vec::with_capacity(points.len() * m);
    for point in points {
        for _ in 0..m {
            jobs.push((point, rng.split()));
        }
    }
    jobs.into_par_iter()
        .map(|(point, mut job_rng)| {
            let sampled = gen.sample_sequence(sequence_length, &mut job_rng);
            let trajectory = registry.apply_sequence(&sampled.sequence, point, &mut job_rng)?;
            let losses = cumulative_losses(&trajectory, disc, eps);
            let rewards = incremental_rewards(&losses);
            let diversity = diversity_distance(disc, point, trajectory.final_point(), metric, eps);
            let final_prob = disc.predict(trajectory.final_point(), eps).prob;
            Ok(Rollout {
                sampled,
                trajectory,
                tape: RewardTape {
                    losses,
                    rewards,
                    to_go: Vec::new(),
                    advantages: Vec::new(),
                },
                diversity,
                final_prob,
            })
        })
        .collect()
}

/// Fills in reward-to-go and baseline-subtracted advantages across a batch.
/// Returns the per-step baseline.
pub fn finalize_advantages(
    rollouts: &mut [Rollout],
    discount: f64,
) -> Result<Vec<f64>, TrainingError> {
    for r in rollouts.iter_mut() {
        r.tape.to_go = rewards_to_go(&r.tape.rewards, discount);
    }
    let to_gos: Vec<&[f64]> = rollouts.iter().map(|r| r.tape.to_go.as_slice()).collect();
    let baseline = batch_baseline(&to_gos)?;
    for r in rollouts.iter_mut() {
        r.tape.advantages = r
            .tape
            .to_go
            .iter()
            .zip(&baseline)
            .map(|(t, b)| t - b)
            .collect();
    }
    Ok(baseline)
}

/// Mean over rollouts of the advantage-weighted log-policy gradient. This is
/// the descent direction for the generator's adversarial objective.
pub fn advantage_weighted_gradient(
    gen: &Generator,
    rollouts: &[Rollout],
) -> Result<GradientAccumulator, TrainingError> {
    let grads: Vec<GradientAccumulator> = rollouts
        .par_iter()
        .map(|r| gen.grad_log_policy(&r.sampled, &r.tape.advantages))
        .collect::<Result<_, _>>()?;
    let mut total = GradientAccumulator::zeros(gen.param_count());
    for g in &grads {
        total.add(g);
    }
    total.scale(1.0 / rollouts.len().max(1) as f64);
    Ok(total)
}

/// Score-function estimate of the gradient of the mean diversity distance:
/// each rollout's whole-sequence log-probability is weighted by its centered
/// diversity reward. Returns the gradient and the mean distance.
pub fn diversity_gradient(
    gen: &Generator,
    rollouts: &[Rollout],
) -> Result<(GradientAccumulator, f64), TrainingError> {
    let n = rollouts.len().max(1) as f64;
    let mean = rollouts.iter().map(|r| r.diversity).sum::<f64>() / n;
    let grads: Vec<GradientAccumulator> = rollouts
        .par_iter()
        .map(|r| {
            let w = vec![r.diversity - mean; r.sampled.len()];
            gen.grad_log_policy(&r.sampled, &w)
        })
        .collect::<Result<_, _>>()?;
    let mut total = GradientAccumulator::zeros(gen.param_count());
    for g in &grads {
        total.add(g);
    }
    total.scale(1.0 / n);
    Ok((total, mean))
}

/// Summary statistics of one policy-gradient batch.
#[derive(Debug, Clone)]
pub struct BatchStats {
    /// Per-step baseline used for the advantages.
    pub baselines: Vec<f64>,
    /// Mean final-minus-initial cumulative loss (the generator objective).
    pub generator_loss: f64,
    /// Mean origin-to-final diversity distance.
    pub diversity: f64,
    /// Fraction of rollouts whose final point scores below 0.5.
    pub null_rate: f64,
}

fn stats_from_rollouts(rollouts: &[Rollout], baselines: Vec<f64>) -> BatchStats {
    let n = rollouts.len().max(1) as f64;
    let generator_loss = rollouts
        .iter()
        .map(|r| r.tape.losses.last().unwrap() - r.tape.losses[0])
        .sum::<f64>()
        / n;
    let diversity = rollouts.iter().map(|r| r.diversity).sum::<f64>() / n;
    let null_rate = rollouts.iter().filter(|r| r.final_prob < 0.5).count() as f64 / n;
    BatchStats {
        baselines,
        generator_loss,
        diversity,
        null_rate,
    }
}

/// Monte Carlo estimate of the adversarial policy gradient over a batch of
/// `points.len() * m` rollouts (must be at least 2, so the baseline is
/// meaningful). Returns the flat gradient and the batch statistics.
#[allow(clippy::too_many_arguments)]
pub fn policy_gradient_estimate(
    gen: &Generator,
    disc: &Discriminator,
    registry: &TfRegistry,
    points: &[DataPoint],
    m: usize,
    sequence_length: usize,
    discount: f64,
    eps: f64,
    rng: &mut RandomSource,
) -> Result<(GradientAccumulator, BatchStats), TrainingError> {
    if points.len() * m < 2 {
        return Err(TrainingError::BatchTooSmall(points.len() * m));
    }
    let mut rollouts = rollout_batch(
        gen,
        disc,
        registry,
        points,
        m,
        sequence_length,
        eps,
        DistanceMetric::RawInput,
        rng,
    )?;
    let baselines = finalize_advantages(&mut rollouts, discount)?;
    let grad = advantage_weighted_gradient(gen, &rollouts)?;
    Ok((grad, stats_from_rollouts(&rollouts, baselines)))
}

/// One full generator update: adversarial policy gradient plus the
/// inverse-diversity term, applied with momentum SGD. Returns the batch
/// statistics and the sampled sequences (for diagnostics).
pub fn combined_generator_step(
    gen: &mut Generator,
    opt: &mut MomentumSgd,
    disc: &Discriminator,
    registry: &TfRegistry,
    points: &[DataPoint],
    cfg: &TrainingConfig,
    rng: &mut RandomSource,
) -> Result<(BatchStats, Vec<TfSequence>), TrainingError> {
    if points.len() * cfg.sequences_per_point < 2 {
        return Err(TrainingError::BatchTooSmall(
            points.len() * cfg.sequences_per_point,
        ));
    }
    let mut rollouts = rollout_batch(
        gen,
        disc,
        registry,
        points,
        cfg.sequences_per_point,
        cfg.sequence_length,
        cfg.prob_clamp_eps,
        cfg.distance_metric,
        rng,
    )?;
    let baselines = finalize_advantages(&mut rollouts, cfg.discount)?;
    let mut grad = advantage_weighted_gradient(gen, &rollouts)?;
    if cfg.diversity_weight > 0.0 {
        let (div_grad, mean_div) = diversity_gradient(gen, &rollouts)?;
        // The objective adds diversity_weight / mean_diversity; descending it
        // scales the diversity gradient by -weight / mean^2 (floored).
        let scale = -cfg.diversity_weight / (mean_div * mean_div).max(DIVERSITY_FLOOR);
        grad.add_scaled(&div_grad, scale);
    }
    gen.apply_gradient_update(opt, &grad, cfg.gen_lr, cfg.momentum);
    let sequences = rollouts.iter().map(|r| r.sampled.sequence.clone()).collect();
    Ok((stats_from_rollouts(&rollouts, baselines), sequences))
}

/// Transforms each point with one freshly sampled sequence; used for the
/// discriminator's adversarial batch and for dataset augmentation.
pub fn transform_batch(
    gen: &Generator,
    registry: &TfRegistry,
    points: &[DataPoint],
    sequence_length: usize,
    rng: &mut RandomSource,
) -> Result<Vec<DataPoint>, TrainingError> {
    let mut jobs = Vec::with_capacity(points.len());
    for point in points {
        jobs.push((point, rng.split()));
    }
    jobs.into_par_iter()
        .map(|(point, mut job_rng)| {
            let sampled = gen.sample_sequence(sequence_length, &mut job_rng);
            let traj = registry.apply_sequence(&sampled.sequence, point, &mut job_rng)?;
            Ok(traj.final_point().clone())
        })
        .collect()
}

/// Estimates the fraction of rollouts whose final point satisfies the null
/// predicate, cycling through `data` for `trials` rollouts.
pub fn null_rate<F>(
    gen: &Generator,
    registry: &TfRegistry,
    is_null: F,
    data: &[DataPoint],
    sequence_length: usize,
    trials: usize,
    rng: &mut RandomSource,
) -> Result<f64, TrainingError>
where
    F: Fn(&DataPoint) -> bool + Sync,
{
    if data.is_empty() {
        return Err(TrainingError::EmptyData);
    }
    assert!(trials > 0, "null-rate estimation needs at least one trial");
    let mut jobs = Vec::with_capacity(trials);
    for t in 0..trials {
        jobs.push((&data[t % data.len()], rng.split()));
    }
    let hits: Vec<bool> = jobs
        .into_par_iter()
        .map(|(point, mut job_rng)| {
            let sampled = gen.sample_sequence(sequence_length, &mut job_rng);
            let traj = registry.apply_sequence(&sampled.sequence, point, &mut job_rng)?;
            Ok::<bool, TrainingError>(is_null(traj.final_point()))
        })
        .collect::<Result<_, _>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / trials as f64)
}

/// Everything that trains: both models plus their optimizer states.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub generator: Generator,
    pub gen_opt: MomentumSgd,
    pub discriminator: Discriminator,
    pub disc_opt: MomentumSgd,
    /// Number of completed training epochs.
    pub epoch: usize,
    /// Master seed of the run this state belongs to.
    pub seed: u64,
}

impl TrainState {
    /// Fresh state (zero velocities, epoch 0) for a new run.
    pub fn new(generator: Generator, discriminator: Discriminator, seed: u64) -> Self {
        let gen_opt = MomentumSgd::new(generator.param_count());
        let disc_opt = MomentumSgd::new(discriminator.param_count());
        Self {
            generator,
            gen_opt,
            discriminator,
            disc_opt,
            epoch: 0,
            seed,
        }
    }
}

/// Result of an adversarial training run: one metrics row per epoch and one
/// checkpoint per epoch boundary (including the initial state, so a run of
/// E epochs yields E + 1 checkpoints).
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<MetricsRow>,
    pub checkpoints: Vec<Checkpoint>,
}

/// Alternating adversarial training: per batch, one discriminator ascent step
/// on real-vs-transformed data, then one combined generator descent step.
///
/// Epochs are full passes over `data` in shuffled batches of
/// `cfg.batch_points`. With `cfg.split_batches` the two updates see disjoint
/// halves of every batch (batches too small to split are skipped). The whole
/// run is a pure function of `cfg.seed`.
pub fn adversarial_train(
    state: &mut TrainState,
    registry: &TfRegistry,
    data: &[DataPoint],
    cfg: &TrainingConfig,
) -> Result<TrainOutcome, TrainingError> {
    if data.is_empty() {
        return Err(TrainingError::EmptyData);
    }
    let tf_names = registry.names();
    let k = registry.len();
    let mut run_rng = RandomSource::new(cfg.seed);
    let mut checkpoints = vec![Checkpoint::capture(state, &tf_names, cfg)];
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        state.epoch += 1;
        let mut epoch_rng = run_rng.split();
        let mut order: Vec<usize> = (0..data.len()).collect();
        epoch_rng.shuffle(&mut order);

        let mut disc_losses = Vec::new();
        let mut gen_loss_sum = 0.0;
        let mut diversity_sum = 0.0;
        let mut null_sum = 0.0;
        let mut rollouts_total = 0.0;
        let mut marginal_counts = vec![0usize; k];
        let mut last_sequences: Vec<TfSequence> = Vec::new();

        for chunk in order.chunks(cfg.batch_points) {
            let batch: Vec<DataPoint> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (disc_part, gen_part) = if cfg.split_batches {
                if batch.len() < 2 {
                    continue;
                }
                batch.split_at(batch.len() / 2)
            } else {
                (&batch[..], &batch[..])
            };

            let mut fake_rng = epoch_rng.split();
            let fakes = transform_batch(
                &state.generator,
                registry,
                disc_part,
                cfg.sequence_length,
                &mut fake_rng,
            )?;
            let disc_loss = state.discriminator.update(
                &mut state.disc_opt,
                disc_part,
                &fakes,
                cfg.disc_lr,
                cfg.momentum,
                cfg.prob_clamp_eps,
            )?;
            disc_losses.push(disc_loss);

            if gen_part.len() * cfg.sequences_per_point >= 2 {
                let mut gen_rng = epoch_rng.split();
                let (stats, sequences) = combined_generator_step(
                    &mut state.generator,
                    &mut state.gen_opt,
                    &state.discriminator,
                    registry,
                    gen_part,
                    cfg,
                    &mut gen_rng,
                )?;
                let weight = sequences.len() as f64;
                gen_loss_sum += stats.generator_loss * weight;
                diversity_sum += stats.diversity * weight;
                null_sum += stats.null_rate * weight;
                rollouts_total += weight;
                for seq in &sequences {
                    for &id in &seq.ids {
                        marginal_counts[id - 1] += 1;
                    }
                }
                last_sequences = sequences;
            }
        }

        let marginals = match state.generator.exact_marginals() {
            Some(m) => m,
            None => {
                let total: usize = marginal_counts.iter().sum();
                if total == 0 {
                    vec![1.0 / k as f64; k]
                } else {
                    marginal_counts
                        .iter()
                        .map(|&c| c as f64 / total as f64)
                        .collect()
                }
            }
        };
        let denom = rollouts_total.max(1.0);
        let ngram_n = cfg.sequence_length.min(2);
        metrics.push(MetricsRow {
            epoch: state.epoch,
            generator_loss: gen_loss_sum / denom,
            discriminator_loss: if disc_losses.is_empty() {
                0.0
            } else {
                disc_losses.iter().sum::<f64>() / disc_losses.len() as f64
            },
            null_rate: null_sum / denom,
            diversity: diversity_sum / denom,
            mean_jaccard: mean_pairwise_jaccard(&last_sequences, k),
            ngram_uniqueness: if last_sequences.is_empty() {
                0.0
            } else {
                ngram_uniqueness(&last_sequences, ngram_n, k)
            },
            marginals,
        });
        checkpoints.push(Checkpoint::capture(state, &tf_names, cfg));
    }

    Ok(TrainOutcome {
        metrics,
        checkpoints,
    })
}
