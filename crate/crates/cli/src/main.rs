//! `augseq` — train, inspect, and apply data-augmentation policies.

mod commands;
mod plot;
mod tabular;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Exit code for malformed invocations (bad flags or flag values).
const EXIT_USAGE: u8 = 1;
/// Exit code for failures while executing a well-formed command.
const EXIT_RUNTIME: u8 = 2;

/// A bad invocation detected after clap parsing (e.g. a malformed flag
/// value); distinguished from runtime errors by exit code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Wraps a message as a usage error; the message should name the offending
/// flag or variable.
pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Debug, Parser)]
#[command(
    name = "augseq",
    version,
    about = "Adversarially trained data-augmentation policies over black-box transformations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Synthetic worlds `gen-data` can sample.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum World {
    /// Points drawn uniformly from the two-dimensional unit ball.
    Ball,
}

/// Generator architectures.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Model {
    /// Mean-field policy: one shared categorical distribution per step.
    Mf,
    /// LSTM policy: the distribution conditions on the choices so far.
    Lstm,
}

/// Null-class discriminators.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Disc {
    /// Analytic unit-ball membership oracle (fixed, not trained).
    Oracle,
    /// Trainable one-hidden-layer MLP.
    Mlp,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset (CSV plus a JSON sidecar).
    GenData {
        /// Synthetic world to sample from.
        #[arg(long, value_enum)]
        world: World,
        /// Number of points to generate.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        /// Seed for the sampling stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path; the sidecar lands next to it with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an augmentation policy against a TF catalog.
    Train {
        /// JSON training config; defaults apply to every omitted field.
        #[arg(long)]
        config: Option<PathBuf>,
        /// TF catalog: "goodbad", "lossy", or "raster:<tf|tf|...>".
        #[arg(long = "tf-set")]
        tf_set: String,
        /// Generator architecture.
        #[arg(long, value_enum)]
        model: Model,
        /// Discriminator kind.
        #[arg(long, value_enum)]
        disc: Disc,
        /// Training data: CSV points or an IDX image stack.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for checkpoints, metrics.csv, and report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample TF sequences from a trained checkpoint.
    Sample {
        /// Checkpoint to sample from.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of sequences to print (one per line).
        #[arg(long)]
        count: u64,
        /// Seed for the sampling stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit a dataset augmented with policy-transformed copies.
    Augment {
        /// Checkpoint whose policy supplies the transformations.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset to augment: CSV points or an IDX image stack.
        #[arg(long)]
        data: PathBuf,
        /// Transformed copies to add per input point.
        #[arg(long)]
        copies: u64,
        /// Output path (same format as the input data).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare sequence diversity of a trained policy against uniform.
    Diag {
        /// Checkpoint to diagnose.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Sequences to sample per policy (pairwise stats need at least 2).
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        samples: u64,
    },
    /// Train one policy per sequence length and tabulate the outcomes.
    SweepLength {
        /// JSON training config; defaults apply to every omitted field.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated sequence lengths, e.g. "1,2,5,10".
        #[arg(long)]
        lengths: String,
    },
    /// Render a training report's scatter data as an SVG.
    Plot {
        /// report.json produced by train.
        #[arg(long)]
        report: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Applies AUGSEQ_THREADS (when set) to the global worker pool before any
/// parallel work runs.
fn configure_threads() -> anyhow::Result<()> {
    let raw = match std::env::var("AUGSEQ_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(err) => return Err(usage(format!("AUGSEQ_THREADS: {err}"))),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("AUGSEQ_THREADS: {raw:?} is not a positive integer")))?;
    if threads == 0 {
        return Err(usage("AUGSEQ_THREADS: thread count must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|err| anyhow::anyhow!("failed to configure the thread pool: {err}"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData {
            world,
            count,
            seed,
            out,
        } => commands::gen_data(world, count as usize, seed, &out),
        Command::Train {
            config,
            tf_set,
            model,
            disc,
            data,
            out,
        } => commands::train(config.as_deref(), &tf_set, model, disc, &data, &out),
        Command::Sample {
            checkpoint,
            count,
            seed,
        } => commands::sample(&checkpoint, count as usize, seed),
        Command::Augment {
            checkpoint,
            data,
            copies,
            out,
        } => commands::augment(&checkpoint, &data, copies as usize, &out),
        Command::Diag {
            checkpoint,
            samples,
        } => commands::diag(&checkpoint, samples as usize),
        Command::SweepLength { config, lengths } => {
            commands::sweep_length(config.as_deref(), &lengths)
        }
        Command::Plot { report, out } => commands::plot(&report, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap sends --help/--version to stdout and exits cleanly; real
            // parse failures go to stderr as usage errors.
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if err.is::<UsageError>() => {
            eprintln!("error: {err}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_subcommand() {
        let lines: &[&[&str]] = &[
            &["augseq", "gen-data", "--world", "ball", "--count", "10", "--seed", "7", "--out", "p.csv"],
            &["augseq", "train", "--tf-set", "goodbad", "--model", "mf", "--disc", "oracle", "--data", "p.csv", "--out", "run"],
            &["augseq", "sample", "--checkpoint", "c.json", "--count", "0"],
            &["augseq", "augment", "--checkpoint", "c.json", "--data", "p.csv", "--copies", "2", "--out", "a.csv"],
            &["augseq", "diag", "--checkpoint", "c.json", "--samples", "100"],
            &["augseq", "sweep-length", "--lengths", "1,2,5,10"],
            &["augseq", "plot", "--report", "r.json", "--out", "s.svg"],
        ];
        for line in lines {
            Cli::try_parse_from(line.iter()).unwrap_or_else(|e| panic!("{line:?}: {e}"));
        }
    }

    #[test]
    fn rejects_zero_count_and_small_sample_budgets() {
        let zero_count = [
            "augseq", "gen-data", "--world", "ball", "--count", "0", "--out", "p.csv",
        ];
        let err = Cli::try_parse_from(zero_count.iter()).unwrap_err();
        assert!(err.use_stderr());
        assert!(err.to_string().contains("--count"));

        let one_sample = ["augseq", "diag", "--checkpoint", "c.json", "--samples", "1"];
        let err = Cli::try_parse_from(one_sample.iter()).unwrap_err();
        assert!(err.use_stderr());
        assert!(err.to_string().contains("--samples"));
    }

    #[test]
    fn help_is_not_a_usage_error() {
        let err = Cli::try_parse_from(["augseq", "--help"].iter()).unwrap_err();
        assert!(!err.use_stderr());
    }

    #[test]
    fn usage_helper_downcasts() {
        let err = usage("--lengths: bad token");
        assert!(err.is::<UsageError>());
        assert_eq!(err.to_string(), "--lengths: bad token");
    }
}
