use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::textproc::ngrams;

/// Clipped n-gram statistics behind one BLEU score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuStats {
    /// Highest n-gram order used: `min(4, |candidate|)`.
    pub order: usize,
    /// Clipped matches per order, starting at unigrams.
    pub matches: Vec<usize>,
    /// Candidate n-gram counts per order.
    pub totals: Vec<usize>,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub brevity_penalty: f64,
    pub score: f64,
}

pub const MAX_ORDER: usize = 4;

/// Sentence BLEU without smoothing. Short candidates use BLEU-n with
/// `n = |candidate|`, so a three-word spoiler is scored on 1- to 3-grams.
pub fn bleu_stats<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<BleuStats, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let cand: Vec<&str> = candidate.iter().map(AsRef::as_ref).collect();
    let refs: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let order = MAX_ORDER.min(cand.len());
    let mut matches = Vec::with_capacity(order);
    let mut totals = Vec::with_capacity(order);
    for n in 1..=order {
        let c = ngrams(&cand, n).expect("order >= 1");
        let r = ngrams(&refs, n).expect("order >= 1");
        let clipped = c
            .iter()
            .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
            .sum();
        matches.push(clipped);
        totals.push(cand.len() + 1 - n);
    }
    let brevity_penalty = if cand.is_empty() {
        0.0
    } else {
        (1.0 - refs.len() as f64 / cand.len() as f64).min(0.0).exp()
    };
    let score = if order == 0 || matches.contains(&0) {
        0.0
    } else {
        let log_sum: f64 = matches
            .iter()
            .zip(&totals)
            .map(|(&m, &t)| (m as f64 / t as f64).ln())
            .sum();
        brevity_penalty * (log_sum / order as f64).exp()
    };
    Ok(BleuStats {
        order,
        matches,
        totals,
        candidate_len: cand.len(),
        reference_len: refs.len(),
        brevity_penalty,
        score: score.clamp(0.0, 1.0),
    })
}

pub fn bleu<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<f64, MetricError> {
    bleu_stats(candidate, reference).map(|s| s.score)
}
