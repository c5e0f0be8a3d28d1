//! Randomized invariant checks.
//!
//! Unit tests in the modules pin concrete values; these properties assert the
//! algebra that must hold for *every* input: metric axioms of the diversity
//! measures, the telescoping identity of incremental rewards, distribution
//! invariants of the policies, exactness promises of the raster and
//! checkpoint codecs, and the determinism contract of the seeded RNG.

use proptest::prelude::*;

use augseq::checkpoint::Checkpoint;
use augseq::discriminator::{Discriminator, MlpDiscriminator, OracleDiscriminator};
use augseq::generator::{softmax, Generator, LstmPolicy, MeanFieldPolicy};
use augseq::raster::{load_idx_images, save_idx_images, GrayImage, RasterTf};
use augseq::synthetic::{outside_unit_ball, sample_ball_dataset};
use augseq::training::metrics::{generalized_jaccard, mean_pairwise_jaccard, ngram_uniqueness};
use augseq::training::{batch_baseline, incremental_rewards, rewards_to_go, TrainState};
use augseq::{DataPoint, RandomSource, TfRegistry, TfSequence, TrainingConfig};

/// A TF alphabet size together with sequences of ids drawn from it.
fn alphabet_with_sequences(
    count: std::ops::Range<usize>,
) -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (2..=6usize).prop_flat_map(move |k| {
        let seq = prop::collection::vec(1..=k, 1..12);
        (Just(k), prop::collection::vec(seq, count.clone()))
    })
}

fn raster_tf() -> impl Strategy<Value = RasterTf> {
    prop_oneof![
        (-180.0..180.0f64).prop_map(RasterTf::Rotate),
        (0.5..2.0f64).prop_map(RasterTf::Zoom),
        (-30.0..30.0f64).prop_map(RasterTf::Shear),
        (-4.0..4.0f64, -4.0..4.0f64).prop_map(|(dx, dy)| RasterTf::Shift(dx, dy)),
        (-3.0..3.0f64).prop_map(RasterTf::Swirl),
    ]
}

/// Images whose pixels are exact byte multiples, the only values the IDX
/// codec promises to round-trip.
fn byte_images() -> impl Strategy<Value = Vec<GrayImage>> {
    (1..=6usize, 1..=6usize, 1..=4usize).prop_flat_map(|(h, w, count)| {
        prop::collection::vec(
            prop::collection::vec(0u8..=255, h * w)
                .prop_map(move |bytes| {
                    GrayImage::new(h, w, bytes.iter().map(|&b| b as f64 / 255.0).collect())
                        .expect("shape matches")
                }),
            count,
        )
    })
}

proptest! {
    // -- diversity metrics --------------------------------------------------

    #[test]
    fn generalized_jaccard_is_a_bounded_pseudometric(
        (k, seqs) in alphabet_with_sequences(3..4)
    ) {
        let [a, b, c] = [&seqs[0], &seqs[1], &seqs[2]]
            .map(|ids| TfSequence::new(ids.clone()));
        let d_ab = generalized_jaccard(&a, &b, k);
        let d_ba = generalized_jaccard(&b, &a, k);
        let d_ac = generalized_jaccard(&a, &c, k);
        let d_cb = generalized_jaccard(&c, &b, k);
        prop_assert!((0.0..=1.0).contains(&d_ab));
        prop_assert_eq!(d_ab, d_ba);
        prop_assert_eq!(generalized_jaccard(&a, &a, k), 0.0);
        prop_assert!(d_ab <= d_ac + d_cb + 1e-12);
    }

    #[test]
    fn generalized_jaccard_ignores_sequence_order(
        (k, seqs) in alphabet_with_sequences(1..2),
        seed in any::<u64>(),
    ) {
        let a = TfSequence::new(seqs[0].clone());
        let mut shuffled = seqs[0].clone();
        RandomSource::new(seed).shuffle(&mut shuffled);
        prop_assert_eq!(generalized_jaccard(&a, &TfSequence::new(shuffled), k), 0.0);
    }

    #[test]
    fn pairwise_diagnostics_stay_in_the_unit_interval(
        (k, seqs) in alphabet_with_sequences(2..8)
    ) {
        let seqs: Vec<TfSequence> = seqs.into_iter().map(TfSequence::new).collect();
        let jaccard = mean_pairwise_jaccard(&seqs, k);
        prop_assert!((0.0..=1.0).contains(&jaccard));

        let shortest = seqs.iter().map(TfSequence::len).min().unwrap();
        let uniqueness = ngram_uniqueness(&seqs, shortest.min(3), k);
        prop_assert!(uniqueness > 0.0 && uniqueness <= 1.0);
    }

    // -- reward algebra -----------------------------------------------------

    #[test]
    fn incremental_rewards_telescope_to_the_endpoint_difference(
        losses in prop::collection::vec(-20.0..5.0f64, 2..14)
    ) {
        let rewards = incremental_rewards(&losses);
        prop_assert_eq!(rewards.len(), losses.len() - 1);
        let total: f64 = rewards.iter().sum();
        let direct = losses.last().unwrap() - losses[0];
        prop_assert!((total - direct).abs() <= 1e-9);
    }

    #[test]
    fn rewards_to_go_are_discounted_suffix_sums(
        rewards in prop::collection::vec(-10.0..10.0f64, 1..10),
        discount in 0.0..=1.0f64,
    ) {
        let to_go = rewards_to_go(&rewards, discount);
        prop_assert_eq!(to_go.len(), rewards.len());
        for t in 0..rewards.len() {
            let direct: f64 = rewards[t..]
                .iter()
                .enumerate()
                .map(|(j, r)| discount.powi(j as i32) * r)
                .sum();
            prop_assert!((to_go[t] - direct).abs() <= 1e-9);
        }
        // Degenerate discounts pin the two ends of the family.
        let myopic = rewards_to_go(&rewards, 0.0);
        prop_assert_eq!(myopic, rewards.clone());
    }

    #[test]
    fn batch_baseline_is_the_per_step_mean(
        tapes in (1..6usize, 1..8usize).prop_flat_map(|(rows, cols)| {
            prop::collection::vec(prop::collection::vec(-5.0..5.0f64, cols), rows)
        })
    ) {
        let views: Vec<&[f64]> = tapes.iter().map(Vec::as_slice).collect();
        let baseline = batch_baseline(&views).unwrap();
        for (t, b) in baseline.iter().enumerate() {
            let mean: f64 = tapes.iter().map(|tape| tape[t]).sum::<f64>() / tapes.len() as f64;
            prop_assert!((b - mean).abs() <= 1e-12);
        }
    }

    // -- policies -----------------------------------------------------------

    #[test]
    fn softmax_is_a_shift_invariant_distribution(
        logits in prop::collection::vec(-3.0..3.0f64, 2..8),
        shift in -10.0..10.0f64,
    ) {
        let probs = softmax(&logits);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));

        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        for (p, q) in probs.iter().zip(softmax(&shifted)) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn mean_field_samples_follow_their_own_bookkeeping(
        logits in prop::collection::vec(-2.0..2.0f64, 2..7),
        len in 1..10usize,
        seed in any::<u64>(),
    ) {
        let k = logits.len();
        let policy = MeanFieldPolicy::from_logits(logits);
        let probs = policy.step_distribution();
        let mut rng = RandomSource::new(seed);
        let sampled = policy.sample_sequence(len, &mut rng);

        prop_assert_eq!(sampled.sequence.len(), len);
        for (t, &id) in sampled.sequence.ids.iter().enumerate() {
            prop_assert!((1..=k).contains(&id));
            prop_assert_eq!(&sampled.step_probs[t], &probs);
            prop_assert_eq!(sampled.step_log_probs[t], probs[id - 1].ln());
        }
        let total: f64 = sampled.step_log_probs.iter().sum();
        prop_assert_eq!(sampled.log_prob(), total);
    }

    #[test]
    fn lstm_sampling_agrees_with_its_forward_recomputation(
        k in 2..5usize,
        hidden in 2..5usize,
        len in 1..7usize,
        seed in any::<u64>(),
    ) {
        let mut rng = RandomSource::new(seed);
        let policy = LstmPolicy::new(k, hidden, 2.0, &mut rng);
        let sampled = policy.sample_sequence(len, &mut rng);

        for (t, &id) in sampled.sequence.ids.iter().enumerate() {
            prop_assert!((1..=k).contains(&id));
            let step = &sampled.step_probs[t];
            prop_assert!((step.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let recomputed = policy.weighted_log_prob(&sampled.sequence.ids, &vec![1.0; len]);
        prop_assert!((sampled.log_prob() - recomputed).abs() <= 1e-9);
    }

    // -- worlds and trajectories ---------------------------------------------

    #[test]
    fn unit_ball_samples_stay_strictly_inside(seed in any::<u64>()) {
        for point in sample_ball_dataset(64, seed) {
            prop_assert!(!outside_unit_ball(&point), "norm {} >= 1", point.norm());
        }
    }

    #[test]
    fn applying_a_sequence_is_the_left_fold_of_its_steps(
        ids in prop::collection::vec(1..=3usize, 1..10),
        origin in prop::collection::vec(-2.0..2.0f64, 1..4),
    ) {
        let mut registry = TfRegistry::new();
        registry.register("inc", |x: &DataPoint, _: &mut RandomSource| {
            let mut v = x.values.clone();
            v[0] += 1.0;
            DataPoint::new(v)
        }).unwrap();
        registry.register("neg", |x: &DataPoint, _: &mut RandomSource| {
            DataPoint::new(x.values.iter().map(|v| -v).collect())
        }).unwrap();
        registry.register("half", |x: &DataPoint, _: &mut RandomSource| {
            DataPoint::new(x.values.iter().map(|v| v / 2.0).collect())
        }).unwrap();

        let origin = DataPoint::new(origin);
        let seq = TfSequence::new(ids.clone());
        let mut rng = RandomSource::new(0);
        let traj = registry.apply_sequence(&seq, &origin, &mut rng).unwrap();

        prop_assert_eq!(traj.states.len(), ids.len());
        let mut state = origin;
        for (id, reached) in ids.iter().zip(&traj.states) {
            state = registry.apply(*id, &state, &mut rng).unwrap();
            prop_assert_eq!(&state, reached);
        }
        prop_assert_eq!(traj.final_point(), &state);
    }

    // -- raster codecs -------------------------------------------------------

    #[test]
    fn raster_tfs_preserve_shape_and_pixel_range(
        images in byte_images(),
        tf in raster_tf(),
    ) {
        let img = &images[0];
        let out = tf.apply(img);
        prop_assert_eq!(out.height(), img.height());
        prop_assert_eq!(out.width(), img.width());
        prop_assert!(out.pixels().iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn idx_image_files_round_trip_exactly(images in byte_images()) {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("first.idx");
        let second = dir.path().join("second.idx");

        save_idx_images(&images, &first).unwrap();
        let reloaded = load_idx_images(&first).unwrap();
        prop_assert_eq!(&reloaded, &images);

        save_idx_images(&reloaded, &second).unwrap();
        prop_assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }

    // -- checkpoints and RNG ------------------------------------------------

    #[test]
    fn checkpoint_files_restore_training_state_exactly(
        k in 2..5usize,
        use_lstm in any::<bool>(),
        use_mlp in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut rng = RandomSource::new(seed);
        let generator = if use_lstm {
            Generator::Lstm(LstmPolicy::new(k, 3, 2.0, &mut rng))
        } else {
            Generator::MeanField(MeanFieldPolicy::new(k))
        };
        let discriminator = if use_mlp {
            Discriminator::Mlp(MlpDiscriminator::new(2, 4, &mut rng))
        } else {
            Discriminator::Oracle(OracleDiscriminator::new(1.0))
        };
        let state = TrainState::new(generator, discriminator, seed);
        let names: Vec<String> = (0..k).map(|i| format!("tf_{i}")).collect();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        Checkpoint::capture(&state, &names, &TrainingConfig::default()).save(&path).unwrap();
        let restored = Checkpoint::load(&path).unwrap().restore(&names).unwrap();

        prop_assert_eq!(restored.epoch, state.epoch);
        prop_assert_eq!(restored.seed, state.seed);
        prop_assert_eq!(restored.generator.params_flat(), state.generator.params_flat());
        prop_assert_eq!(
            restored.discriminator.params_flat(),
            state.discriminator.params_flat()
        );
        prop_assert_eq!(restored.gen_opt.velocity(), state.gen_opt.velocity());
    }

    #[test]
    fn seeded_rng_streams_are_reproducible(seed in any::<u64>()) {
        let mut a = RandomSource::new(seed);
        let mut b = RandomSource::new(seed);
        for _ in 0..16 {
            prop_assert_eq!(a.uniform(), b.uniform());
        }
        prop_assert_eq!(a.fork_seed(), b.fork_seed());
        let (mut fa, mut fb) = (a.split(), b.split());
        for _ in 0..16 {
            prop_assert_eq!(fa.normal(0.0, 1.0), fb.normal(0.0, 1.0));
            prop_assert_eq!(a.index(1000), b.index(1000));
        }
    }
}
