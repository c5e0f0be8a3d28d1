//! Sequence diagnostics and per-epoch training metrics.
//!
//! The diagnostics quantify how far a trained policy has moved from uniform:
//! the generalized Jaccard distance measures multiset overlap between two
//! sequences, and n-gram uniqueness measures how much of the available n-gram
//! space a batch of sequences still explores.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::tf::TfSequence;

/// Generalized Jaccard distance between the TF multisets of two sequences:
/// `1 - sum_k min(count_a, count_b) / sum_k max(count_a, count_b)`.
///
/// Zero distance means identical multisets (order is ignored); the maximum
/// of 1 means the sequences share no TF at all.
pub fn generalized_jaccard(a: &TfSequence, b: &TfSequence, k: usize) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "sequences must be non-empty");
    let count = |seq: &TfSequence| {
        let mut c = vec![0usize; k];
        for &id in &seq.ids {
            assert!(id >= 1 && id <= k, "TF id {id} outside 1..={k}");
            c[id - 1] += 1;
        }
        c
    };
    let ca = count(a);
    let cb = count(b);
    let mut min_sum = 0usize;
    let mut max_sum = 0usize;
    for (x, y) in ca.iter().zip(&cb) {
        min_sum += x.min(y);
        max_sum += x.max(y);
    }
    1.0 - min_sum as f64 / max_sum as f64
}

/// Mean generalized Jaccard distance over all unordered pairs in a batch.
/// Batches with fewer than two sequences have no pairs; returns 0.
pub fn mean_pairwise_jaccard(seqs: &[TfSequence], k: usize) -> f64 {
    if seqs.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..seqs.len() {
        for j in i + 1..seqs.len() {
            total += generalized_jaccard(&seqs[i], &seqs[j], k);
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Fraction of the reachable n-gram space a batch of sequences covers:
/// `distinct n-grams / min(K^n, total n-gram slots)`.
///
/// Every sequence must be at least `n` long so each contributes
/// `len - n + 1` slots.
pub fn ngram_uniqueness(seqs: &[TfSequence], n: usize, k: usize) -> f64 {
    assert!(n >= 1, "n-grams need n >= 1");
    assert!(!seqs.is_empty(), "need at least one sequence");
    let mut distinct: HashSet<&[usize]> = HashSet::new();
    let mut slots = 0usize;
    for seq in seqs {
        assert!(
            seq.len() >= n,
            "sequence of length {} is shorter than n = {n}",
            seq.len()
        );
        for window in seq.ids.windows(n) {
            distinct.insert(window);
        }
        slots += seq.len() - n + 1;
    }
    let capacity = (k as f64).powi(n as i32).min(slots as f64);
    distinct.len() as f64 / capacity
}

/// One row of per-epoch training metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    /// Batch estimate of the generator objective: mean final-minus-initial
    /// cumulative loss across rollouts.
    pub generator_loss: f64,
    /// Discriminator's adversarial objective (constant under the oracle).
    pub discriminator_loss: f64,
    /// Fraction of rollouts whose final point the discriminator scores below 0.5.
    pub null_rate: f64,
    /// Mean origin-to-final diversity distance.
    pub diversity: f64,
    /// Mean pairwise generalized Jaccard distance over the epoch's final batch.
    pub mean_jaccard: f64,
    /// Bigram uniqueness over the epoch's final batch.
    pub ngram_uniqueness: f64,
    /// Per-TF marginal step frequencies (sum to 1): exact softmax for the
    /// mean-field policy, empirical counts for the LSTM.
    pub marginals: Vec<f64>,
}

/// Formats a float with 9 significant digits, the fixed width used by every
/// CSV this crate writes.
pub fn fmt_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Header row for a metrics CSV; marginal columns are named after the TFs.
pub fn metrics_csv_header(tf_names: &[String]) -> String {
    let mut cols = vec![
        "epoch".to_string(),
        "generator_loss".to_string(),
        "discriminator_loss".to_string(),
        "null_rate".to_string(),
        "diversity".to_string(),
        "mean_jaccard".to_string(),
        "ngram_uniqueness".to_string(),
    ];
    for name in tf_names {
        cols.push(csv_quote(&format!("freq_{name}")));
    }
    cols.join(",")
}

/// One metrics row in the fixed column order of [`metrics_csv_header`].
pub fn metrics_csv_row(row: &MetricsRow) -> String {
    let mut cols = vec![
        row.epoch.to_string(),
        fmt_sig9(row.generator_loss),
        fmt_sig9(row.discriminator_loss),
        fmt_sig9(row.null_rate),
        fmt_sig9(row.diversity),
        fmt_sig9(row.mean_jaccard),
        fmt_sig9(row.ngram_uniqueness),
    ];
    for &m in &row.marginals {
        cols.push(fmt_sig9(m));
    }
    cols.join(",")
}
