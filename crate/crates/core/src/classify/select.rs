use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::features::{is_post_feature, FeatureVector};
use super::ClassifyError;

/// Feature ids kept after selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub kept: BTreeSet<String>,
}

impl FeatureMask {
    pub fn contains(&self, id: &str) -> bool {
        self.kept.contains(id)
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector(
            v.0.iter()
                .filter(|(k, _)| self.contains(k))
                .map(|(k, &x)| (k.clone(), x))
                .collect(),
        )
    }
}

/// Chi-square statistic of a presence/absence-by-class contingency table.
///
/// `present[c]` counts class-`c` samples containing the feature and
/// `totals[c]` all class-`c` samples. Cells with zero expectation are skipped.
pub fn chi2_statistic(present: &[usize], totals: &[usize]) -> f64 {
    let n: usize = totals.iter().sum();
    let with: usize = present.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let mut chi = 0.0;
    for (&p, &t) in present.iter().zip(totals) {
        for (observed, row) in [(p as f64, with as f64), ((t - p) as f64, n - with as f64)] {
            let expected = row * t as f64 / n;
            if expected > 0.0 {
                chi += (observed - expected).powi(2) / expected;
            }
        }
    }
    chi
}

/// Keeps every post-origin feature and the top `keep_fraction` (rounded up)
/// of document-origin features by chi-square score, ties broken by id.
pub fn chi2_select<S: AsRef<str>>(
    x: &[FeatureVector],
    y: &[S],
    keep_fraction: f64,
) -> Result<FeatureMask, ClassifyError> {
    if x.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(ClassifyError::LabelMismatch(format!(
            "{} vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(ClassifyError::InvalidKeepFraction(keep_fraction));
    }
    let mut classes: Vec<&str> = y.iter().map(AsRef::as_ref).collect::<HashSet<_>>().into_iter().collect();
    classes.sort();
    let class_of: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut totals = vec![0usize; classes.len()];
    let mut presence: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut kept = BTreeSet::new();
    for (v, label) in x.iter().zip(y) {
        let c = class_of[label.as_ref()];
        totals[c] += 1;
        for (id, &w) in &v.0 {
            if is_post_feature(id) {
                kept.insert(id.clone());
            } else if w != 0.0 {
                presence.entry(id.as_str()).or_insert_with(|| vec![0; classes.len()])[c] += 1;
            }
        }
    }
    let mut scored: Vec<(f64, &str)> = presence
        .iter()
        .map(|(id, p)| (chi2_statistic(p, &totals), *id))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    let keep = (keep_fraction * scored.len() as f64).ceil() as usize;
    kept.extend(scored.into_iter().take(keep).map(|(_, id)| id.to_string()));
    Ok(FeatureMask { kept })
}
