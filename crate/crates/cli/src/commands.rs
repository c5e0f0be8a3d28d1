//! Implementations of the CLI subcommands.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use augseq::checkpoint::Checkpoint;
use augseq::config::{load_config, validate_config, TrainingConfig};
use augseq::discriminator::{Discriminator, MlpDiscriminator, OracleDiscriminator};
use augseq::generator::{Generator, LstmPolicy, MeanFieldPolicy};
use augseq::point::DataPoint;
use augseq::raster::{
    load_idx_images, parse_tf_list, register_raster_tfs, save_idx_images, GrayImage,
    IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC,
};
use augseq::rng::RandomSource;
use augseq::synthetic::{
    build_named_set, sample_ball_dataset, sample_sequences, scatter_rows, sequence_length_sweep,
    ScatterRow, SCATTER_POINTS,
};
use augseq::tf::{TfRegistry, TfSequence};
use augseq::training::metrics::{
    mean_pairwise_jaccard, metrics_csv_header, metrics_csv_row, ngram_uniqueness, MetricsRow,
};
use augseq::training::{adversarial_train, TrainState};

use crate::tabular::{feature_header, format_row, read_points, PointSet};
use crate::{usage, Disc, Model, World};

/// Any dataset a command can read: flat points or an image stack.
enum Dataset {
    Points(PointSet),
    Images {
        images: Vec<GrayImage>,
        height: usize,
        width: usize,
    },
}

impl Dataset {
    fn points(&self) -> Vec<DataPoint> {
        match self {
            Dataset::Points(set) => set.points.clone(),
            Dataset::Images { images, .. } => images.iter().map(GrayImage::to_point).collect(),
        }
    }

    fn image_shape(&self) -> Option<(usize, usize)> {
        match self {
            Dataset::Points(_) => None,
            Dataset::Images { height, width, .. } => Some((*height, *width)),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Dataset::Points(set) => set.dim(),
            Dataset::Images { height, width, .. } => height * width,
        }
    }
}

/// Loads `path` as an IDX image stack when it carries the IDX magic, as CSV
/// points otherwise.
fn load_dataset(path: &Path) -> Result<Dataset> {
    let head = std::fs::read(path).with_context(|| format!("failed to read {}", path.display()))?;
    let magic = head
        .get(..4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]));
    match magic {
        Some(IDX_IMAGE_MAGIC) => {
            let images = load_idx_images(path)?;
            let first = images
                .first()
                .ok_or_else(|| anyhow!("{}: image stack is empty", path.display()))?;
            let (height, width) = (first.height(), first.width());
            Ok(Dataset::Images {
                images,
                height,
                width,
            })
        }
        Some(IDX_LABEL_MAGIC) => bail!(
            "{}: this is an IDX label file, expected image or point data",
            path.display()
        ),
        _ => Ok(Dataset::Points(read_points(path)?)),
    }
}

/// Builds the registry a TF-set tag names. Synthetic catalogs draw their
/// directions from `registry_seed`; raster catalogs need the image shape.
fn build_registry(
    tf_set: &str,
    registry_seed: u64,
    image_shape: Option<(usize, usize)>,
) -> Result<TfRegistry> {
    if let Some(list) = tf_set.strip_prefix("raster:") {
        let tfs = parse_tf_list(list).map_err(|e| usage(format!("--tf-set: {e}")))?;
        let (height, width) =
            image_shape.ok_or_else(|| anyhow!("raster TF sets require IDX image data"))?;
        let mut registry = TfRegistry::new();
        register_raster_tfs(&mut registry, &tfs, height, width)?;
        Ok(registry)
    } else {
        build_named_set(tf_set, registry_seed).map_err(|e| usage(format!("--tf-set: {e}")))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("failed to write {}", path.display()))
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GenDataSidecar<'a> {
    world: &'a str,
    count: usize,
    seed: u64,
    dim: usize,
}

pub fn gen_data(world: World, count: usize, seed: u64, out: &Path) -> Result<()> {
    let points = match world {
        World::Ball => sample_ball_dataset(count, seed),
    };
    let dim = points[0].dim();
    let mut csv = feature_header(dim);
    csv.push('\n');
    for p in &points {
        csv.push_str(&format_row(&p.values, None));
        csv.push('\n');
    }
    write_file(out, &csv)?;

    let sidecar = GenDataSidecar {
        world: "ball",
        count,
        seed,
        dim,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    write_file(&out.with_extension("json"), &(json + "\n"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TrainReport<'a> {
    tf_set: &'a str,
    tf_names: Vec<String>,
    seed: u64,
    config: &'a TrainingConfig,
    metrics: &'a [MetricsRow],
    scatter: Vec<ScatterRow>,
}

pub fn train(
    config: Option<&Path>,
    tf_set: &str,
    model: Model,
    disc: Disc,
    data: &Path,
    out: &Path,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => load_config(path)?,
        None => TrainingConfig::default(),
    };
    cfg.tf_set = Some(tf_set.to_string());
    validate_config(&cfg)?;

    let dataset = load_dataset(data)?;
    let points = dataset.points();
    let dim = dataset.dim();

    // Everything below is a pure function of the configured seed: catalog
    // directions, model init, the training run, and the scatter sample each
    // draw from their own forked stream, in this fixed order.
    let user_seed = cfg.seed;
    let mut root = RandomSource::new(user_seed);
    let registry_seed = root.fork_seed();
    let model_seed = root.fork_seed();
    let train_seed = root.fork_seed();
    let scatter_seed = root.fork_seed();

    let registry = build_registry(tf_set, registry_seed, dataset.image_shape())?;
    let k = registry.len();

    let mut model_rng = RandomSource::new(model_seed);
    let generator = match model {
        Model::Mf => Generator::MeanField(MeanFieldPolicy::new(k)),
        Model::Lstm => Generator::Lstm(LstmPolicy::new(
            k,
            cfg.lstm_hidden,
            cfg.logit_scale,
            &mut model_rng,
        )),
    };
    let discriminator = match disc {
        Disc::Oracle => Discriminator::Oracle(OracleDiscriminator::new(1.0)),
        Disc::Mlp => {
            Discriminator::Mlp(MlpDiscriminator::new(dim, cfg.disc_hidden, &mut model_rng))
        }
    };

    let mut state = TrainState::new(generator, discriminator, user_seed);
    let mut train_cfg = cfg.clone();
    train_cfg.seed = train_seed;
    let outcome = adversarial_train(&mut state, &registry, &points, &train_cfg)?;

    std::fs::create_dir_all(out).with_context(|| format!("failed to create {}", out.display()))?;
    for ckpt in &outcome.checkpoints {
        ckpt.save(&out.join(Checkpoint::standard_file_name(ckpt.epoch)))?;
    }

    let names = registry.names();
    let mut csv = metrics_csv_header(&names);
    csv.push('\n');
    for row in &outcome.metrics {
        csv.push_str(&metrics_csv_row(row));
        csv.push('\n');
    }
    write_file(&out.join("metrics.csv"), &csv)?;

    // Scatter pairs are only meaningful for planar data; image worlds get an
    // empty scatter (the plot command then renders just the frame).
    let scatter = if dim == 2 {
        let mut scatter_rng = RandomSource::new(scatter_seed);
        scatter_rows(
            &state.generator,
            &registry,
            &points,
            cfg.sequence_length,
            SCATTER_POINTS,
            &mut scatter_rng,
        )?
    } else {
        Vec::new()
    };
    let report = TrainReport {
        tf_set,
        tf_names: names,
        seed: user_seed,
        config: &cfg,
        metrics: &outcome.metrics,
        scatter,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&out.join("report.json"), &(json + "\n"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

pub fn sample(checkpoint: &Path, count: usize, seed: u64) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let state = ckpt.restore(&ckpt.tf_names)?;
    let mut rng = RandomSource::new(seed);
    let mut lines = String::new();
    for _ in 0..count {
        let sampled = state
            .generator
            .sample_sequence(ckpt.sequence_length, &mut rng);
        let names: Vec<&str> = sampled
            .sequence
            .ids
            .iter()
            .map(|&id| ckpt.tf_names[id - 1].as_str())
            .collect();
        lines.push_str(&names.join(" "));
        lines.push('\n');
    }
    print!("{lines}");
    Ok(())
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

/// Rebuilds the registry a checkpoint was trained against, using the same
/// seed-forking discipline as `train`.
fn registry_from_checkpoint(
    ckpt: &Checkpoint,
    image_shape: Option<(usize, usize)>,
) -> Result<TfRegistry> {
    let tf_set = ckpt
        .tf_set
        .as_deref()
        .ok_or_else(|| anyhow!("checkpoint does not record its TF set"))?;
    let mut root = RandomSource::new(ckpt.seed);
    let registry_seed = root.fork_seed();
    build_registry(tf_set, registry_seed, image_shape)
}

pub fn augment(checkpoint: &Path, data: &Path, copies: usize, out: &Path) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let dataset = load_dataset(data)?;
    let registry = registry_from_checkpoint(&ckpt, dataset.image_shape())?;
    let state = ckpt.restore(&registry.names())?;

    // Deterministic without a --seed flag: the stream is derived from the
    // checkpoint's own seed, one fork past the registry's.
    let mut root = RandomSource::new(ckpt.seed);
    let _registry_seed = root.fork_seed();
    let mut rng = RandomSource::new(root.fork_seed());

    let mut transform = |point: &DataPoint| -> Result<DataPoint> {
        let sampled = state
            .generator
            .sample_sequence(ckpt.sequence_length, &mut rng);
        let traj = registry.apply_sequence(&sampled.sequence, point, &mut rng)?;
        Ok(traj.final_point().clone())
    };

    match &dataset {
        Dataset::Points(set) => {
            let mut csv = String::new();
            if let Some(header) = &set.header {
                csv.push_str(header);
                csv.push('\n');
            }
            for (i, point) in set.points.iter().enumerate() {
                let label = set.labels.as_ref().map(|l| l[i].as_str());
                csv.push_str(&format_row(&point.values, label));
                csv.push('\n');
                for _ in 0..copies {
                    let t = transform(point)?;
                    csv.push_str(&format_row(&t.values, label));
                    csv.push('\n');
                }
            }
            write_file(out, &csv)?;
        }
        Dataset::Images {
            images,
            height,
            width,
        } => {
            let mut stack = Vec::with_capacity(images.len() * (1 + copies));
            for img in images {
                stack.push(img.clone());
                let point = img.to_point();
                for _ in 0..copies {
                    let t = transform(&point)?;
                    stack.push(GrayImage::from_point(&t, *height, *width)?);
                }
            }
            save_idx_images(&stack, out)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// diag
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DiversitySummary {
    mean_jaccard: f64,
    ngram_uniqueness: f64,
}

#[derive(Serialize, Deserialize)]
struct DiagReport {
    samples: usize,
    sequence_length: usize,
    ngram_n: usize,
    trained: DiversitySummary,
    uniform: DiversitySummary,
}

fn summarize(seqs: &[TfSequence], k: usize, n: usize) -> DiversitySummary {
    DiversitySummary {
        mean_jaccard: mean_pairwise_jaccard(seqs, k),
        ngram_uniqueness: ngram_uniqueness(seqs, n, k),
    }
}

pub fn diag(checkpoint: &Path, samples: usize) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let state = ckpt.restore(&ckpt.tf_names)?;
    let k = ckpt.tf_names.len();
    let len = ckpt.sequence_length;
    let n = len.min(2);

    // Both policies sample from identical streams so the comparison is paired.
    let mut trained_rng = RandomSource::new(ckpt.seed);
    let mut uniform_rng = RandomSource::new(ckpt.seed);
    let trained = sample_sequences(&state.generator, samples, len, &mut trained_rng);
    let uniform_gen = Generator::MeanField(MeanFieldPolicy::new(k));
    let uniform = sample_sequences(&uniform_gen, samples, len, &mut uniform_rng);

    let report = DiagReport {
        samples,
        sequence_length: len,
        ngram_n: n,
        trained: summarize(&trained, k, n),
        uniform: summarize(&uniform, k, n),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep-length
// ---------------------------------------------------------------------------

pub fn sweep_length(config: Option<&Path>, lengths: &str) -> Result<()> {
    let cfg = match config {
        Some(path) => load_config(path)?,
        None => TrainingConfig::default(),
    };

    let mut parsed = Vec::new();
    for token in lengths.split(',') {
        let token = token.trim();
        let value: usize = token
            .parse()
            .map_err(|_| usage(format!("--lengths: {token:?} is not a positive integer")))?;
        if value == 0 {
            return Err(usage("--lengths: lengths must be positive"));
        }
        parsed.push(value);
    }

    let rows = sequence_length_sweep(&cfg, &parsed)?;
    let mut csv = String::from("sequence_length,null_rate,end_model_accuracy\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            row.sequence_length, row.null_rate, row.end_model_accuracy
        ));
    }
    print!("{csv}");
    Ok(())
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct ScatterReport {
    #[serde(default)]
    scatter: Vec<ScatterRow>,
}

pub fn plot(report: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(report)
        .with_context(|| format!("failed to read {}", report.display()))?;
    let parsed: ScatterReport = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a scatter report", report.display()))?;
    for row in &parsed.scatter {
        if row.original.len() < 2 || row.transformed.len() < 2 {
            bail!(
                "{}: scatter rows must carry at least two coordinates",
                report.display()
            );
        }
    }
    write_file(out, &crate::plot::render_scatter(&parsed.scatter))?;
    Ok(())
}
