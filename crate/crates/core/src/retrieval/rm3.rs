use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ParagraphIndex, Query, RetrievalError, ScoredPassage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rm3Params {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub orig_weight: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Self {
            fb_docs: 3,
            fb_terms: 10,
            orig_weight: 0.5,
        }
    }
}

/// Feedback weights for the top passages. Non-negative scores are normalized
/// by their sum (uniform when all are zero); log-likelihood scores, which can
/// be negative, are exponentiated first.
fn feedback_weights(top: &[ScoredPassage]) -> Vec<f64> {
    let raw: Vec<f64> = if top.iter().any(|p| p.score < 0.0) {
        let max = top.iter().map(|p| p.score).fold(f64::NEG_INFINITY, f64::max);
        top.iter().map(|p| (p.score - max).exp()).collect()
    } else {
        top.iter().map(|p| p.score).collect()
    };
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 {
        raw.iter().map(|w| w / sum).collect()
    } else {
        vec![1.0 / top.len() as f64; top.len()]
    }
}

/// RM3: a relevance model estimated from the top `fb_docs` passages of
/// `initial`, truncated to `fb_terms` terms, renormalized, and interpolated
/// with the maximum-likelihood original query.
pub fn expand_rm3(
    idx: &ParagraphIndex,
    query: &Query,
    initial: &[ScoredPassage],
    p: Rm3Params,
) -> Result<Query, RetrievalError> {
    let bad = |m: &str| Err(RetrievalError::InvalidFeedbackParams(m.to_string()));
    if initial.is_empty() {
        return bad("empty initial ranking");
    }
    if p.fb_docs == 0 || p.fb_terms == 0 {
        return bad("fb_docs and fb_terms must be positive");
    }
    if !(0.0..=1.0).contains(&p.orig_weight) {
        return bad("orig_weight must lie in [0, 1]");
    }
    let entry_of: HashMap<i32, usize> = idx
        .paragraph_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let top = &initial[..p.fb_docs.min(initial.len())];
    let weights = feedback_weights(top);

    let mut rm: HashMap<&str, f64> = HashMap::new();
    for (passage, w) in top.iter().zip(&weights) {
        let Some(&e) = entry_of.get(&passage.paragraph_index) else {
            return bad("ranking refers to a paragraph outside the index");
        };
        let len = idx.lengths[e];
        if len == 0 {
            continue;
        }
        for (t, &tf) in &idx.term_freqs[e] {
            *rm.entry(t.as_str()).or_default() += tf as f64 / len as f64 * w;
        }
    }
    let mut rm: Vec<(&str, f64)> = rm.into_iter().collect();
    rm.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    rm.truncate(p.fb_terms);
    let rm_sum: f64 = rm.iter().map(|(_, w)| w).sum();

    let q_total = query.total_weight();
    let mut out = Query::default();
    let mut pos: HashMap<String, usize> = HashMap::new();
    let mut add = |out: &mut Query, t: &str, w: f64| {
        if w <= 0.0 {
            return;
        }
        match pos.get(t) {
            Some(&i) => out.terms[i].1 += w,
            None => {
                pos.insert(t.to_string(), out.terms.len());
                out.terms.push((t.to_string(), w));
            }
        }
    };
    if q_total > 0.0 {
        for (t, w) in &query.terms {
            add(&mut out, t, p.orig_weight * w / q_total);
        }
    }
    if rm_sum > 0.0 {
        for (t, w) in &rm {
            add(&mut out, t, (1.0 - p.orig_weight) * w / rm_sum);
        }
    }
    Ok(out)
}
