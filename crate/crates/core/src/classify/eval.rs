use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ClassifyError;

fn check<S: AsRef<str>>(pred: &[S], gold: &[S]) -> Result<(), ClassifyError> {
    if gold.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    if pred.len() != gold.len() {
        return Err(ClassifyError::LabelMismatch(format!(
            "{} predictions but {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    Ok(())
}

pub fn accuracy<S: AsRef<str>>(pred: &[S], gold: &[S]) -> Result<f64, ClassifyError> {
    check(pred, gold)?;
    let hits = pred.iter().zip(gold).filter(|(p, g)| p.as_ref() == g.as_ref()).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Unweighted mean of per-class recall. A class that is predicted but never
/// gold has undefined recall and is reported as missing.
pub fn balanced_accuracy<S: AsRef<str>>(pred: &[S], gold: &[S]) -> Result<f64, ClassifyError> {
    check(pred, gold)?;
    let gold_classes: BTreeSet<&str> = gold.iter().map(AsRef::as_ref).collect();
    if let Some(p) = pred.iter().map(AsRef::as_ref).find(|p| !gold_classes.contains(p)) {
        return Err(ClassifyError::MissingClass(p.to_string()));
    }
    let mut sum = 0.0;
    for c in &gold_classes {
        let (mut hit, mut total) = (0usize, 0usize);
        for (p, g) in pred.iter().zip(gold) {
            if g.as_ref() == *c {
                total += 1;
                hit += usize::from(p.as_ref() == *c);
            }
        }
        sum += hit as f64 / total as f64;
    }
    Ok(sum / gold_classes.len() as f64)
}

/// Counts keyed by gold label, then predicted label.
pub type ConfusionMatrix = BTreeMap<String, BTreeMap<String, usize>>;

pub fn confusion_matrix<S: AsRef<str>>(pred: &[S], gold: &[S]) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::new();
    for (p, g) in pred.iter().zip(gold) {
        *m.entry(g.as_ref().to_string())
            .or_default()
            .entry(p.as_ref().to_string())
            .or_default() += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub posts: usize,
    pub accuracy: f64,
    pub balanced_accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
}

pub fn summarize<S: AsRef<str>>(pred: &[S], gold: &[S]) -> Result<EvalSummary, ClassifyError> {
    Ok(EvalSummary {
        posts: gold.len(),
        accuracy: accuracy(pred, gold)?,
        balanced_accuracy: balanced_accuracy(pred, gold).ok(),
        confusion: confusion_matrix(pred, gold),
    })
}

/// One line of a prediction dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub gold: String,
    pub pred: String,
    pub score: f64,
}
