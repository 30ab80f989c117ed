use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::textproc::stem;

pub const ALPHA: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteorStats {
    pub exact_matches: usize,
    pub stem_matches: usize,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub precision: f64,
    pub recall: f64,
    pub score: f64,
}

impl MeteorStats {
    pub fn matches(&self) -> usize {
        self.exact_matches + self.stem_matches
    }
}

/// Size of the multiset intersection; matched items are removed from both.
fn match_multiset(cand: &mut HashMap<String, usize>, refs: &mut HashMap<String, usize>) -> usize {
    let mut m = 0;
    for (k, c) in cand.iter_mut() {
        if let Some(r) = refs.get_mut(k) {
            let n = (*c).min(*r);
            *c -= n;
            *r -= n;
            m += n;
        }
    }
    m
}

fn bag<'a>(tokens: impl Iterator<Item = &'a str>, f: impl Fn(&str) -> String) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    for t in tokens {
        *out.entry(f(t)).or_insert(0) += 1;
    }
    out
}

fn restem(bag: &HashMap<String, usize>) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    for (t, &c) in bag {
        if c > 0 {
            *out.entry(stem(t)).or_insert(0) += c;
        }
    }
    out
}

/// METEOR with exact then stem matching and no fragmentation penalty, so
/// token order does not matter.
pub fn meteor_stats<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<MeteorStats, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let mut c = bag(candidate.iter().map(AsRef::as_ref), str::to_string);
    let mut r = bag(reference.iter().map(AsRef::as_ref), str::to_string);
    let exact = match_multiset(&mut c, &mut r);
    let stems = match_multiset(&mut restem(&c), &mut restem(&r));
    let m = (exact + stems) as f64;
    let (precision, recall, score) = if m == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        let p = m / candidate.len() as f64;
        let r = m / reference.len() as f64;
        (p, r, p * r / (ALPHA * p + (1.0 - ALPHA) * r))
    };
    Ok(MeteorStats {
        exact_matches: exact,
        stem_matches: stems,
        candidate_len: candidate.len(),
        reference_len: reference.len(),
        precision,
        recall,
        score: score.clamp(0.0, 1.0),
    })
}

pub fn meteor<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<f64, MetricError> {
    meteor_stats(candidate, reference).map(|s| s.score)
}
