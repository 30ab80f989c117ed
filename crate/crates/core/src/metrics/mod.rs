//! Spoiler scoring: adaptive-order BLEU, penalty-free METEOR, and
//! Precision@1, plus run-level reports.

mod bleu;
mod meteor;
mod report;

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::ModelFamily;
use crate::corpus::{gold_paragraphs, ClickbaitPost, Corpus};
use crate::retrieval::ScoredPassage;
use crate::textproc::tokenize;

pub use bleu::{bleu, bleu_stats, BleuStats, MAX_ORDER};
pub use meteor::{meteor, meteor_stats, MeteorStats, ALPHA};
pub use report::{evaluate_run, EvalOptions, EvalReport, PostRow, RunMeta, Summary, BLEU, METEOR, P_AT_1};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("prediction for {0} has no ranking")]
    MissingRanking(String),
    #[error("prediction for {0} has no text")]
    MissingText(String),
    #[error("no predictions to evaluate")]
    EmptyRun,
    #[error("prediction refers to unknown post {0}")]
    UnknownPostId(String),
    #[error("more than one prediction for post {0}")]
    DuplicatePrediction(String),
    #[error("prediction line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A generated spoiler for one post.
///
/// Abstention is explicit: an abstained prediction may carry empty text and
/// scores zero on every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpoilerPrediction {
    pub post_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub abstained: bool,
    /// Paragraph the text came from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paragraph: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<ScoredPassage>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ModelFamily>,
}

impl SpoilerPrediction {
    pub fn abstain(post_id: impl Into<String>) -> Self {
        Self {
            post_id: post_id.into(),
            text: String::new(),
            abstained: true,
            paragraph: None,
            ranking: None,
            family: None,
        }
    }

    pub fn text(post_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            abstained: false,
            text: text.into(),
            ..Self::abstain(post_id)
        }
    }
}

/// Tokens compared by BLEU and METEOR: casefolded, punctuation kept.
pub fn metric_tokens(text: &str) -> Vec<String> {
    tokenize(text).folded
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum P1Mode {
    /// The rank-1 paragraph of the prediction's ranking.
    Retrieval,
    /// The first paragraph that contains the predicted text.
    Qa,
}

impl FromStr for P1Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "retrieval" => Ok(P1Mode::Retrieval),
            "qa" => Ok(P1Mode::Qa),
            other => Err(format!("unknown precision@1 mode {other:?}")),
        }
    }
}

/// Casefolds and collapses whitespace runs to single spaces.
pub fn normalize_for_containment(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Index of the first paragraph whose text contains `needle` after
/// normalization.
pub fn first_containing_paragraph(post: &ClickbaitPost, needle: &str) -> Option<i32> {
    let needle = normalize_for_containment(needle);
    if needle.is_empty() {
        return None;
    }
    post.paragraphs
        .iter()
        .position(|p| normalize_for_containment(p).contains(&needle))
        .map(|i| i as i32)
}

/// 1 when the paragraph credited to the prediction holds part of a gold
/// spoiler, else 0. Abstentions score 0.
pub fn precision_at_1(pred: &SpoilerPrediction, post: &ClickbaitPost, mode: P1Mode) -> Result<u8, MetricError> {
    if pred.abstained {
        return Ok(0);
    }
    let credited = match mode {
        P1Mode::Retrieval => {
            let ranking = pred
                .ranking
                .as_ref()
                .filter(|r| !r.is_empty())
                .ok_or_else(|| MetricError::MissingRanking(pred.post_id.clone()))?;
            let top = ranking.iter().min_by_key(|p| p.rank).expect("non-empty");
            Some(top.paragraph_index)
        }
        P1Mode::Qa => {
            if pred.text.trim().is_empty() {
                return Err(MetricError::MissingText(pred.post_id.clone()));
            }
            first_containing_paragraph(post, &pred.text)
        }
    };
    Ok(credited.map_or(0, |p| u8::from(gold_paragraphs(post).contains(&p))))
}

pub fn read_predictions(input: impl BufRead) -> Result<Vec<SpoilerPrediction>, MetricError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let p: SpoilerPrediction = serde_json::from_str(&line).map_err(|e| MetricError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if !p.abstained && p.text.is_empty() {
            return Err(MetricError::MalformedRecord {
                line: i + 1,
                reason: "empty text without the abstained flag".into(),
            });
        }
        out.push(p);
    }
    Ok(out)
}

pub fn write_predictions<'a>(
    preds: impl IntoIterator<Item = &'a SpoilerPrediction>,
    mut out: impl Write,
) -> std::io::Result<()> {
    for p in preds {
        writeln!(out, "{}", serde_json::to_string(p).expect("serializable"))?;
    }
    Ok(())
}

/// Predictions from a run file: the rank-1 paragraph text is the spoiler.
pub fn predictions_from_run(
    run: Vec<(String, Vec<ScoredPassage>)>,
    corpus: &Corpus,
) -> Result<Vec<SpoilerPrediction>, MetricError> {
    let mut seen = HashSet::new();
    run.into_iter()
        .map(|(id, ranking)| {
            if !seen.insert(id.clone()) {
                return Err(MetricError::DuplicatePrediction(id));
            }
            let post = corpus.get(&id).ok_or_else(|| MetricError::UnknownPostId(id.clone()))?;
            let top = ranking
                .first()
                .ok_or_else(|| MetricError::MissingRanking(id.clone()))?
                .paragraph_index;
            Ok(SpoilerPrediction {
                post_id: id,
                text: post.paragraph(top).unwrap_or_default().to_string(),
                abstained: false,
                paragraph: Some(top),
                ranking: Some(ranking),
                family: Some(ModelFamily::Retrieval),
            })
        })
        .collect()
}
