//! The two-dimensional synthetic world used for end-to-end validation.
//!
//! Data points live in the unit disk; the null class is everything outside
//! it. TFs are vector displacements with a fixed random direction per TF and
//! a magnitude redrawn on every application. Two catalogs exercise different
//! failure modes:
//!
//! * **good/bad**: most TFs nudge points by a small magnitude, a few jump far
//!   enough to leave the disk — the policy must learn to avoid the bad ones.
//! * **lossy**: all TFs share a moderate magnitude, but displacement decays
//!   exponentially with the distance a point sits outside the disk, so a
//!   wrong step is nearly irreversible and the *order* of TFs matters — a
//!   sequence model can pair opposing displacements where a per-step
//!   independent policy cannot.
//!
//! The module also packages the reference experiments the repository's
//! acceptance checks run: the three named generator/TF-set scenarios, the
//! misspecified-TF avoidance run, a downstream-classifier comparison, and a
//! sequence-length sweep.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::Checkpoint;
use crate::config::{ConfigError, TrainingConfig};
use crate::discriminator::{Discriminator, OracleDiscriminator};
use crate::endmodel::{
    evaluate, train_classifier, AugmentationPolicy, EndModelConfig, EndModelError,
};
use crate::generator::{softmax, Generator, LstmPolicy, MeanFieldPolicy};
use crate::point::DataPoint;
use crate::rng::RandomSource;
use crate::tf::{RegistryError, TfRegistry, TfSequence};
use crate::training::metrics::{mean_pairwise_jaccard, ngram_uniqueness, MetricsRow};
use crate::training::{adversarial_train, null_rate, TrainState, TrainingError};

/// Decay rate of the lossy displacement outside the unit disk.
pub const DEFAULT_DECAY: f64 = 5.0;
/// Dataset size of the reference experiments.
pub const REFERENCE_DATASET_SIZE: usize = 1000;
/// Rollouts behind every reported null rate in the reference experiments.
pub const REFERENCE_NULL_TRIALS: usize = 10_000;
/// Sequences sampled for Jaccard / n-gram diagnostics.
pub const DIAGNOSTIC_SAMPLES: usize = 200;
/// Original points included in a report's scatter data.
pub const SCATTER_POINTS: usize = 200;
/// Dataset size used by the sequence-length sweep (kept small; the sweep
/// trains one policy per length).
pub const SWEEP_DATASET_SIZE: usize = 300;
/// Rollouts behind the sweep's null-rate column.
pub const SWEEP_NULL_TRIALS: usize = 2000;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid TF-set parameter: {0}")]
    InvalidSpec(String),
    #[error("unknown TF set {0:?} (expected \"goodbad\" or \"lossy\")")]
    UnknownSet(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    EndModel(#[from] EndModelError),
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One point drawn uniformly from the unit disk (radius `sqrt(u)` puts the
/// density uniform in area, not in radius).
pub fn sample_unit_ball(rng: &mut RandomSource) -> DataPoint {
    let radius = rng.uniform().sqrt();
    let angle = 2.0 * std::f64::consts::PI * rng.uniform();
    DataPoint::new(vec![radius * angle.cos(), radius * angle.sin()])
}

/// A seeded dataset of `count` uniform disk points.
pub fn sample_ball_dataset(count: usize, seed: u64) -> Vec<DataPoint> {
    let mut rng = RandomSource::new(seed);
    (0..count).map(|_| sample_unit_ball(&mut rng)).collect()
}

/// The null predicate of this world: everything at or beyond norm 1.
pub fn outside_unit_ball(x: &DataPoint) -> bool {
    x.norm() >= 1.0
}

/// Balanced two-class task inside the disk: well-separated Gaussian blobs
/// centered at `(-0.5, 0)` (class 0) and `(0.5, 0)` (class 1), std 0.1.
pub fn sample_two_blobs(count: usize, seed: u64) -> Vec<(DataPoint, usize)> {
    let mut rng = RandomSource::new(seed);
    (0..count)
        .map(|i| {
            let label = i % 2;
            let center = if label == 0 { -0.5 } else { 0.5 };
            let x = rng.normal(center, 0.1);
            let y = rng.normal(0.0, 0.1);
            (DataPoint::new(vec![x, y]), label)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// TF catalogs
// ---------------------------------------------------------------------------

/// Displacement closure shared by both catalogs: a fixed unit direction, a
/// magnitude redrawn per application from `N(mu, sigma)` truncated at 0, and
/// an exponential decay of the applied magnitude with the distance the point
/// already sits outside the disk (`decay = 0` disables the damping).
fn displacement_op(
    direction: [f64; 2],
    mu: f64,
    sigma: f64,
    decay: f64,
) -> impl Fn(&DataPoint, &mut RandomSource) -> DataPoint + Send + Sync + 'static {
    move |x, rng| {
        debug_assert_eq!(x.dim(), 2, "displacement TFs are two-dimensional");
        let magnitude = rng.normal(mu, sigma).max(0.0);
        let overshoot = (x.norm() - 1.0).max(0.0);
        let applied = magnitude * (-decay * overshoot).exp();
        DataPoint::new(vec![
            x.values[0] + applied * direction[0],
            x.values[1] + applied * direction[1],
        ])
    }
}

fn random_direction(rng: &mut RandomSource) -> [f64; 2] {
    let angle = 2.0 * std::f64::consts::PI * rng.uniform();
    [angle.cos(), angle.sin()]
}

/// Parameters of the good/bad displacement catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodBadSpec {
    pub k_good: usize,
    pub k_bad: usize,
    /// Mean magnitude of a good displacement; must stay below 1.
    pub mu_good: f64,
    pub sigma_good: f64,
    /// Mean magnitude of a bad displacement; must exceed 1.
    pub mu_bad: f64,
    pub sigma_bad: f64,
}

impl Default for GoodBadSpec {
    fn default() -> Self {
        Self {
            k_good: 8,
            k_bad: 4,
            mu_good: 0.05,
            sigma_good: 0.01,
            mu_bad: 1.5,
            sigma_bad: 0.1,
        }
    }
}

impl GoodBadSpec {
    /// The magnitude ordering `mu_bad > 1 > mu_good >= 0` is what makes the
    /// catalog's labels meaningful; everything else is basic range checking.
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.k_good == 0 || self.k_bad == 0 {
            return Err(SyntheticError::InvalidSpec(
                "good/bad catalog needs at least one TF of each kind".into(),
            ));
        }
        if !(self.mu_good >= 0.0 && self.mu_good < 1.0) {
            return Err(SyntheticError::InvalidSpec(format!(
                "mu_good must satisfy 0 <= mu_good < 1, got {}",
                self.mu_good
            )));
        }
        if !(self.mu_bad > 1.0 && self.mu_bad.is_finite()) {
            return Err(SyntheticError::InvalidSpec(format!(
                "mu_bad must exceed 1, got {}",
                self.mu_bad
            )));
        }
        if self.sigma_good < 0.0 || self.sigma_bad < 0.0 {
            return Err(SyntheticError::InvalidSpec(
                "magnitude standard deviations must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the good/bad catalog: `k_good` small-displacement TFs named
/// `good_i`, then `k_bad` large ones named `bad_i`, directions drawn from the
/// seed at construction. Good directions come in antipodal pairs (every even
/// index reverses the direction before it), so a policy spread over the good
/// TFs has near-zero mean drift — small nudges, not a systematic shift.
pub fn build_goodbad_set(spec: &GoodBadSpec, seed: u64) -> Result<TfRegistry, SyntheticError> {
    spec.validate()?;
    let mut rng = RandomSource::new(seed);
    let mut registry = TfRegistry::new();
    let mut previous = [0.0, 0.0];
    for i in 0..spec.k_good {
        let dir = if i % 2 == 0 {
            previous = random_direction(&mut rng);
            previous
        } else {
            [-previous[0], -previous[1]]
        };
        registry.register(
            &format!("good_{}", i + 1),
            displacement_op(dir, spec.mu_good, spec.sigma_good, 0.0),
        )?;
    }
    for i in 0..spec.k_bad {
        let dir = random_direction(&mut rng);
        registry.register(
            &format!("bad_{}", i + 1),
            displacement_op(dir, spec.mu_bad, spec.sigma_bad, 0.0),
        )?;
    }
    Ok(registry)
}

/// Parameters of the lossy displacement catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossySpec {
    pub k: usize,
    /// Mean magnitude; below 1 so no single step is guaranteed to exit.
    pub mu: f64,
    pub sigma: f64,
    /// Exponential decay rate of the applied magnitude outside the disk.
    pub decay: f64,
}

impl Default for LossySpec {
    fn default() -> Self {
        Self {
            k: 10,
            mu: 0.4,
            sigma: 0.05,
            decay: DEFAULT_DECAY,
        }
    }
}

impl LossySpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.k == 0 {
            return Err(SyntheticError::InvalidSpec(
                "lossy catalog needs at least one TF".into(),
            ));
        }
        if !(self.mu >= 0.0 && self.mu < 1.0) {
            return Err(SyntheticError::InvalidSpec(format!(
                "mu must satisfy 0 <= mu < 1, got {}",
                self.mu
            )));
        }
        if self.sigma < 0.0 {
            return Err(SyntheticError::InvalidSpec(
                "sigma must be non-negative".into(),
            ));
        }
        if !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(SyntheticError::InvalidSpec(format!(
                "decay must be a non-negative finite number, got {}",
                self.decay
            )));
        }
        Ok(())
    }
}

/// Builds the lossy catalog: `k` displacement TFs named `move_i`, all with
/// the same magnitude distribution and decay, directions drawn from the seed.
pub fn build_lossy_set(spec: &LossySpec, seed: u64) -> Result<TfRegistry, SyntheticError> {
    spec.validate()?;
    let mut rng = RandomSource::new(seed);
    let mut registry = TfRegistry::new();
    for i in 0..spec.k {
        let dir = random_direction(&mut rng);
        registry.register(
            &format!("move_{}", i + 1),
            displacement_op(dir, spec.mu, spec.sigma, spec.decay),
        )?;
    }
    Ok(registry)
}

/// Builds a catalog by its public tag, with default parameters.
pub fn build_named_set(name: &str, seed: u64) -> Result<TfRegistry, SyntheticError> {
    match name {
        "goodbad" => build_goodbad_set(&GoodBadSpec::default(), seed),
        "lossy" => build_lossy_set(&LossySpec::default(), seed),
        other => Err(SyntheticError::UnknownSet(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Policy diagnostics
// ---------------------------------------------------------------------------

/// Draws `count` independent sequences from a policy.
pub fn sample_sequences(
    gen: &Generator,
    count: usize,
    len: usize,
    rng: &mut RandomSource,
) -> Vec<TfSequence> {
    (0..count)
        .map(|_| gen.sample_sequence(len, rng).sequence)
        .collect()
}

/// Empirical per-TF step frequencies over sampled sequences; sums to 1.
pub fn empirical_marginals(
    gen: &Generator,
    len: usize,
    samples: usize,
    rng: &mut RandomSource,
) -> Vec<f64> {
    assert!(len >= 1 && samples >= 1);
    let k = gen.tf_count();
    let mut counts = vec![0usize; k];
    for _ in 0..samples {
        for id in gen.sample_sequence(len, rng).sequence.ids {
            counts[id - 1] += 1;
        }
    }
    let total = (samples * len) as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// Null rate plus sequence-diversity summaries for one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyDiagnostics {
    /// Fraction of rollouts whose final point leaves the disk.
    pub null_rate: f64,
    /// Mean pairwise generalized Jaccard distance over sampled sequences.
    pub mean_jaccard: f64,
    /// Bigram uniqueness over the same sample (unigram when L = 1).
    pub ngram_uniqueness: f64,
}

/// Evaluates a policy against the unit-disk null predicate and summarizes
/// the diversity of its sampled sequences.
pub fn diagnose_policy(
    gen: &Generator,
    registry: &TfRegistry,
    data: &[DataPoint],
    sequence_length: usize,
    null_trials: usize,
    sequence_samples: usize,
    rng: &mut RandomSource,
) -> Result<PolicyDiagnostics, SyntheticError> {
    let rate = null_rate(
        gen,
        registry,
        outside_unit_ball,
        data,
        sequence_length,
        null_trials,
        rng,
    )?;
    let seqs = sample_sequences(gen, sequence_samples, sequence_length, rng);
    let k = registry.len();
    Ok(PolicyDiagnostics {
        null_rate: rate,
        mean_jaccard: mean_pairwise_jaccard(&seqs, k),
        ngram_uniqueness: ngram_uniqueness(&seqs, sequence_length.min(2), k),
    })
}

/// One original point and its transformed image, for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterRow {
    pub original: Vec<f64>,
    pub transformed: Vec<f64>,
}

/// Transforms the first `count` points (cycling) with freshly sampled
/// sequences, recording original/transformed pairs.
pub fn scatter_rows(
    gen: &Generator,
    registry: &TfRegistry,
    data: &[DataPoint],
    sequence_length: usize,
    count: usize,
    rng: &mut RandomSource,
) -> Result<Vec<ScatterRow>, SyntheticError> {
    assert!(!data.is_empty());
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let point = &data[i % data.len()];
        let sampled = gen.sample_sequence(sequence_length, rng);
        let traj = registry.apply_sequence(&sampled.sequence, point, rng)?;
        rows.push(ScatterRow {
            original: point.values.clone(),
            transformed: traj.final_point().values.clone(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Reference experiments
// ---------------------------------------------------------------------------

/// The three named generator/TF-set scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceVariant {
    /// Mean-field policy on the good/bad catalog.
    GoodbadMf,
    /// Mean-field policy on the lossy catalog.
    LossyMf,
    /// LSTM policy on the lossy catalog.
    LossyLstm,
}

impl ReferenceVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "goodbad_mf" => Some(Self::GoodbadMf),
            "lossy_mf" => Some(Self::LossyMf),
            "lossy_lstm" => Some(Self::LossyLstm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::GoodbadMf => "goodbad_mf",
            Self::LossyMf => "lossy_mf",
            Self::LossyLstm => "lossy_lstm",
        }
    }

    pub fn tf_set_tag(self) -> &'static str {
        match self {
            Self::GoodbadMf => "goodbad",
            Self::LossyMf | Self::LossyLstm => "lossy",
        }
    }

    pub fn uses_lstm(self) -> bool {
        matches!(self, Self::LossyLstm)
    }
}

/// Training configuration of a reference run: library defaults with the
/// TF-set tag filled in. The two lossy variants share every hyperparameter,
/// so their comparison isolates the model class.
pub fn reference_config(variant: ReferenceVariant) -> TrainingConfig {
    TrainingConfig {
        tf_set: Some(variant.tf_set_tag().to_string()),
        ..TrainingConfig::default()
    }
}

/// JSON report of a reference run: configuration echo, per-policy
/// diagnostics, per-epoch metrics, and scatter data for plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceReport {
    pub variant: String,
    /// Master seed of the experiment (not the internal sub-seeds).
    pub seed: u64,
    pub config: TrainingConfig,
    pub tf_names: Vec<String>,
    pub trained: PolicyDiagnostics,
    pub uniform: PolicyDiagnostics,
    /// Final per-TF marginals: exact for mean field, empirical for the LSTM.
    pub final_marginals: Vec<f64>,
    pub metrics: Vec<MetricsRow>,
    pub scatter: Vec<ScatterRow>,
}

/// A finished reference run: the trained state, its registry, the per-epoch
/// checkpoints, and the report.
pub struct ReferenceOutcome {
    pub state: TrainState,
    pub registry: TfRegistry,
    pub checkpoints: Vec<Checkpoint>,
    pub report: ReferenceReport,
}

/// Runs a reference experiment with the standard budget (1000 points,
/// default epochs and sequence length, oracle discriminator).
pub fn run_reference_experiment(
    variant: ReferenceVariant,
    seed: u64,
) -> Result<ReferenceOutcome, SyntheticError> {
    run_reference_experiment_with_config(variant, seed, &reference_config(variant))
}

/// Reference experiment with an explicit configuration (the TF-set tag in
/// `cfg` is overridden by the variant's). Everything — registry directions,
/// dataset, model init, training, diagnostics — derives from `seed`.
pub fn run_reference_experiment_with_config(
    variant: ReferenceVariant,
    seed: u64,
    cfg: &TrainingConfig,
) -> Result<ReferenceOutcome, SyntheticError> {
    let mut root = RandomSource::new(seed);
    let registry_seed = root.fork_seed();
    let data_seed = root.fork_seed();
    let model_seed = root.fork_seed();
    let train_seed = root.fork_seed();
    let diag_seed = root.fork_seed();
    let marginal_seed = root.fork_seed();
    let scatter_seed = root.fork_seed();

    let mut cfg = cfg.clone();
    cfg.tf_set = Some(variant.tf_set_tag().to_string());
    cfg.seed = train_seed;
    crate::config::validate_config(&cfg)?;

    let registry = build_named_set(variant.tf_set_tag(), registry_seed)?;
    let k = registry.len();
    let data = sample_ball_dataset(REFERENCE_DATASET_SIZE, data_seed);

    let generator = if variant.uses_lstm() {
        Generator::Lstm(LstmPolicy::new(
            k,
            cfg.lstm_hidden,
            cfg.logit_scale,
            &mut RandomSource::new(model_seed),
        ))
    } else {
        Generator::MeanField(MeanFieldPolicy::new(k))
    };
    let discriminator = Discriminator::Oracle(OracleDiscriminator::new(1.0));
    let mut state = TrainState::new(generator, discriminator, seed);
    let outcome = adversarial_train(&mut state, &registry, &data, &cfg)?;

    // Both policies are diagnosed with the same stream so the comparison is
    // paired; an untrained mean-field policy is then *exactly* the uniform
    // policy, rollout for rollout.
    let trained = diagnose_policy(
        &state.generator,
        &registry,
        &data,
        cfg.sequence_length,
        REFERENCE_NULL_TRIALS,
        DIAGNOSTIC_SAMPLES,
        &mut RandomSource::new(diag_seed),
    )?;
    let uniform_gen = Generator::MeanField(MeanFieldPolicy::new(k));
    let uniform = diagnose_policy(
        &uniform_gen,
        &registry,
        &data,
        cfg.sequence_length,
        REFERENCE_NULL_TRIALS,
        DIAGNOSTIC_SAMPLES,
        &mut RandomSource::new(diag_seed),
    )?;

    let final_marginals = state.generator.exact_marginals().unwrap_or_else(|| {
        empirical_marginals(
            &state.generator,
            cfg.sequence_length,
            2000,
            &mut RandomSource::new(marginal_seed),
        )
    });
    let scatter = scatter_rows(
        &state.generator,
        &registry,
        &data,
        cfg.sequence_length,
        SCATTER_POINTS,
        &mut RandomSource::new(scatter_seed),
    )?;

    let report = ReferenceReport {
        variant: variant.name().to_string(),
        seed,
        config: cfg,
        tf_names: registry.names(),
        trained,
        uniform,
        final_marginals,
        metrics: outcome.metrics,
        scatter,
    };
    Ok(ReferenceOutcome {
        state,
        registry,
        checkpoints: outcome.checkpoints,
        report,
    })
}

// ---------------------------------------------------------------------------
// Misspecified-TF experiment
// ---------------------------------------------------------------------------

/// Catalog for the misspecified-TF run: 8 good TFs plus 2 whose displacement
/// mean of 3 exceeds any disk diameter, so they exit from everywhere.
pub fn misspecified_spec() -> GoodBadSpec {
    GoodBadSpec {
        k_good: 8,
        k_bad: 2,
        mu_bad: 3.0,
        sigma_bad: 0.1,
        ..GoodBadSpec::default()
    }
}

/// Per-epoch marginal trajectory of a mean-field policy trained against two
/// always-exiting TFs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MisspecifiedReport {
    pub tf_names: Vec<String>,
    /// Ids (1-based) of the always-exiting TFs.
    pub misspecified_ids: Vec<usize>,
    /// Exact marginals after each epoch; index 0 is the untrained policy.
    pub marginal_history: Vec<Vec<f64>>,
    pub final_marginals: Vec<f64>,
}

/// Trains a mean-field policy on the misspecified catalog and extracts the
/// marginal trajectory from the per-epoch checkpoints.
pub fn run_misspecified_experiment(
    cfg: &TrainingConfig,
    dataset_size: usize,
) -> Result<MisspecifiedReport, SyntheticError> {
    let mut root = RandomSource::new(cfg.seed);
    let registry_seed = root.fork_seed();
    let data_seed = root.fork_seed();
    let train_seed = root.fork_seed();

    let spec = misspecified_spec();
    let registry = build_goodbad_set(&spec, registry_seed)?;
    let data = sample_ball_dataset(dataset_size, data_seed);
    let mut cfg = cfg.clone();
    cfg.seed = train_seed;
    crate::config::validate_config(&cfg)?;

    let generator = Generator::MeanField(MeanFieldPolicy::new(registry.len()));
    let discriminator = Discriminator::Oracle(OracleDiscriminator::new(1.0));
    let mut state = TrainState::new(generator, discriminator, cfg.seed);
    let outcome = adversarial_train(&mut state, &registry, &data, &cfg)?;

    let marginal_history: Vec<Vec<f64>> = outcome
        .checkpoints
        .iter()
        .map(|ckpt| match &ckpt.generator {
            crate::checkpoint::GeneratorCheckpoint::MeanField { params, .. } => softmax(params),
            other => unreachable!("misspecified run is mean-field only, got {other:?}"),
        })
        .collect();
    let final_marginals = marginal_history.last().expect("at least epoch 0").clone();

    Ok(MisspecifiedReport {
        tf_names: registry.names(),
        misspecified_ids: (spec.k_good + 1..=spec.k_good + spec.k_bad).collect(),
        marginal_history,
        final_marginals,
    })
}

// ---------------------------------------------------------------------------
// Downstream comparison and sequence-length sweep
// ---------------------------------------------------------------------------

/// Test accuracies of one paired downstream run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndModelComparison {
    /// Accuracy with policy-driven augmentation.
    pub augmented: f64,
    /// Accuracy of the identically seeded run without augmentation.
    pub baseline: f64,
}

/// Trains the downstream classifier twice on the 20-labeled-point two-blob
/// task — once with augmentation from the given policy, once without — with
/// identical seeding, and reports both test accuracies.
pub fn endmodel_comparison(
    gen: &Generator,
    registry: &TfRegistry,
    sequence_length: usize,
    seed: u64,
) -> Result<EndModelComparison, SyntheticError> {
    let mut root = RandomSource::new(seed);
    let labeled = sample_two_blobs(20, root.fork_seed());
    let unlabeled: Vec<DataPoint> = sample_two_blobs(100, root.fork_seed())
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let test = sample_two_blobs(400, root.fork_seed());
    let cfg = EndModelConfig {
        seed: root.fork_seed(),
        ..EndModelConfig::default()
    };

    let policy = AugmentationPolicy {
        generator: gen,
        registry,
        sequence_length,
    };
    let (augmented_clf, _) = train_classifier(&labeled, &unlabeled, Some(&policy), &cfg)?;
    let (baseline_clf, _) = train_classifier(&labeled, &[], None, &cfg)?;
    Ok(EndModelComparison {
        augmented: evaluate(&augmented_clf, &test),
        baseline: evaluate(&baseline_clf, &test),
    })
}

/// One row of a sequence-length sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub sequence_length: usize,
    /// Null rate of the policy trained at this length.
    pub null_rate: f64,
    /// Downstream test accuracy with augmentation from that policy.
    pub end_model_accuracy: f64,
}

/// Trains one mean-field policy on the lossy catalog per requested length
/// (sorted, deduplicated) with everything else fixed, and reports the null
/// rate plus downstream accuracy for each. No monotonicity is asserted; the
/// sweep only records what happened.
pub fn sequence_length_sweep(
    cfg: &TrainingConfig,
    lengths: &[usize],
) -> Result<Vec<SweepRow>, SyntheticError> {
    let mut lengths: Vec<usize> = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.is_empty() {
        return Err(SyntheticError::InvalidSpec(
            "the sweep needs at least one sequence length".into(),
        ));
    }
    if lengths[0] == 0 {
        return Err(SyntheticError::InvalidSpec(
            "sequence lengths must be at least 1".into(),
        ));
    }

    let mut rows = Vec::with_capacity(lengths.len());
    for &length in &lengths {
        // Every length re-derives the same sub-seeds, so the runs differ in
        // nothing but the sequence length.
        let mut root = RandomSource::new(cfg.seed);
        let registry_seed = root.fork_seed();
        let data_seed = root.fork_seed();
        let train_seed = root.fork_seed();
        let null_seed = root.fork_seed();
        let end_seed = root.fork_seed();

        let registry = build_lossy_set(&LossySpec::default(), registry_seed)?;
        let data = sample_ball_dataset(SWEEP_DATASET_SIZE, data_seed);
        let mut run_cfg = cfg.clone();
        run_cfg.sequence_length = length;
        run_cfg.tf_set = Some("lossy".to_string());
        run_cfg.seed = train_seed;
        crate::config::validate_config(&run_cfg)?;

        let generator = Generator::MeanField(MeanFieldPolicy::new(registry.len()));
        let discriminator = Discriminator::Oracle(OracleDiscriminator::new(1.0));
        let mut state = TrainState::new(generator, discriminator, run_cfg.seed);
        adversarial_train(&mut state, &registry, &data, &run_cfg)?;

        let rate = null_rate(
            &state.generator,
            &registry,
            outside_unit_ball,
            &data,
            length,
            SWEEP_NULL_TRIALS,
            &mut RandomSource::new(null_seed),
        )?;
        let comparison = endmodel_comparison(&state.generator, &registry, length, end_seed)?;
        rows.push(SweepRow {
            sequence_length: length,
            null_rate: rate,
            end_model_accuracy: comparison.augmented,
        });
    }
    Ok(rows)
}
