//! High-confidence score thresholds: confusion counts against human
//! correctness judgments, threshold sweeps, and threshold selection.
//!
//! A prediction counts as positive when its score is `>=` the threshold.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::SpoilerType;

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("no judged samples")]
    EmptySamples,
    #[error("threshold grid must be sorted ascending")]
    UnsortedGrid,
    #[error("threshold table has no rows")]
    EmptyTable,
    #[error("threshold {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Metrics that carry a high-confidence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bleu,
    Meteor,
    Bertscore,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bleu => "bleu",
            Metric::Meteor => "meteor",
            Metric::Bertscore => "bertscore",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bleu" | "bleu-4" | "bleu4" => Ok(Metric::Bleu),
            "meteor" => Ok(Metric::Meteor),
            "bertscore" => Ok(Metric::Bertscore),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// Which kind of generator produced a spoiler; thresholds differ per family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    #[default]
    Qa,
    Retrieval,
}

impl ModelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFamily::Qa => "qa",
            ModelFamily::Retrieval => "retrieval",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "qa" => Ok(ModelFamily::Qa),
            "retrieval" => Ok(ModelFamily::Retrieval),
            other => Err(format!("unknown model family {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedSample {
    pub post_id: String,
    pub metric_score: f64,
    pub human_correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

pub fn confusion_at(samples: &[JudgedSample], threshold: f64) -> Result<Confusion, CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::EmptySamples);
    }
    let mut c = Confusion::default();
    for s in samples {
        match (s.metric_score >= threshold, s.human_correct) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    #[serde(flatten)]
    pub counts: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub metric: Metric,
    pub spoiler_type: SpoilerType,
    pub family: ModelFamily,
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdTable {
    /// A table from externally reported false-positive/false-negative counts
    /// (true counts unknown and left at zero).
    pub fn from_fp_fn(
        metric: Metric,
        spoiler_type: SpoilerType,
        family: ModelFamily,
        rows: &[(f64, usize, usize)],
    ) -> Self {
        Self {
            metric,
            spoiler_type,
            family,
            rows: rows
                .iter()
                .map(|&(threshold, fp, fneg)| ThresholdRow {
                    threshold,
                    counts: Confusion {
                        false_pos: fp,
                        false_neg: fneg,
                        ..Confusion::default()
                    },
                })
                .collect(),
        }
    }

    /// FP never rises and FN never falls as the threshold grows.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].counts.false_pos <= w[0].counts.false_pos && w[1].counts.false_neg >= w[0].counts.false_neg
        })
    }
}

/// Grid used for question-answering generators: 10%..80%.
pub fn qa_grid() -> Vec<f64> {
    (1..=8).map(|i| i as f64 / 10.0).collect()
}

/// Grid used for retrieval generators: 5%, then 10%..60%.
pub fn retrieval_grid() -> Vec<f64> {
    std::iter::once(0.05).chain((1..=6).map(|i| i as f64 / 10.0)).collect()
}

pub fn sweep(
    samples: &[JudgedSample],
    grid: &[f64],
    metric: Metric,
    spoiler_type: SpoilerType,
    family: ModelFamily,
) -> Result<ThresholdTable, CalibrationError> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(CalibrationError::UnsortedGrid);
    }
    let rows = grid
        .iter()
        .map(|&t| {
            Ok(ThresholdRow {
                threshold: t,
                counts: confusion_at(samples, t)?,
            })
        })
        .collect::<Result<_, CalibrationError>>()?;
    Ok(ThresholdTable {
        metric,
        spoiler_type,
        family,
        rows,
    })
}

/// Which end of a run of identical (FP, FN) rows to pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plateau {
    #[default]
    Lowest,
    Highest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionPolicy {
    /// Largest tolerated number of false positives; `None` is unbounded.
    pub fp_budget: Option<usize>,
    pub plateau: Plateau,
}

impl SelectionPolicy {
    pub fn budget(fp_budget: usize) -> Self {
        Self {
            fp_budget: Some(fp_budget),
            plateau: Plateau::Lowest,
        }
    }
}

/// Smallest threshold from which on every stricter row stays within the
/// false-positive budget; the largest threshold when none does.
///
/// On monotone tables this is simply the first row with `FP <= budget`.
/// With `Plateau::Highest` the pick then moves up through following rows
/// whose FP and FN counts are identical.
pub fn select_threshold(table: &ThresholdTable, policy: SelectionPolicy) -> Result<f64, CalibrationError> {
    let rows = &table.rows;
    let last = rows.last().ok_or(CalibrationError::EmptyTable)?;
    let within = |r: &ThresholdRow| policy.fp_budget.map_or(true, |b| r.counts.false_pos <= b);
    let mut first = None;
    for i in (0..rows.len()).rev() {
        if within(&rows[i]) {
            first = Some(i);
        } else {
            break;
        }
    }
    let Some(mut pick) = first else {
        return Ok(last.threshold);
    };
    if policy.plateau == Plateau::Highest {
        let key = |r: &ThresholdRow| (r.counts.false_pos, r.counts.false_neg);
        while pick + 1 < rows.len() && key(&rows[pick + 1]) == key(&rows[pick]) {
            pick += 1;
        }
    }
    Ok(rows[pick].threshold)
}

/// Thresholds keyed by metric, spoiler type, and generator family.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThresholdSet {
    map: BTreeMap<(Metric, SpoilerType, ModelFamily), f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ThresholdRecord {
    metric: Metric,
    spoiler_type: SpoilerType,
    family: ModelFamily,
    threshold: f64,
}

impl ThresholdSet {
    /// The thresholds selected from the published human-judgment study.
    pub fn published() -> Self {
        Self::read(include_str!("../../../config/thresholds.jsonl").as_bytes())
            .expect("bundled thresholds parse")
    }

    pub fn insert(
        &mut self,
        metric: Metric,
        spoiler_type: SpoilerType,
        family: ModelFamily,
        threshold: f64,
    ) -> Result<(), CalibrationError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CalibrationError::OutOfRange(threshold));
        }
        self.map.insert((metric, spoiler_type, family), threshold);
        Ok(())
    }

    pub fn get(&self, metric: Metric, spoiler_type: SpoilerType, family: ModelFamily) -> Option<f64> {
        self.map.get(&(metric, spoiler_type, family)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Reads one `{metric, spoiler_type, family, threshold}` object per line.
    pub fn read(input: impl BufRead) -> Result<Self, CalibrationError> {
        let mut set = Self::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ThresholdRecord = serde_json::from_str(&line).map_err(|e| CalibrationError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
            set.insert(r.metric, r.spoiler_type, r.family, r.threshold)?;
        }
        Ok(set)
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for (&(metric, spoiler_type, family), &threshold) in &self.map {
            let r = ThresholdRecord {
                metric,
                spoiler_type,
                family,
                threshold,
            };
            writeln!(out, "{}", serde_json::to_string(&r).expect("serializable"))?;
        }
        Ok(())
    }
}

/// One line of a judgments file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub post_id: String,
    pub metric: Metric,
    pub score: f64,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spoiler_type: Option<SpoilerType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<ModelFamily>,
}

pub fn read_judgments(input: impl BufRead) -> Result<Vec<JudgmentRecord>, CalibrationError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: JudgmentRecord = serde_json::from_str(&line).map_err(|e| CalibrationError::MalformedRecord {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&r.score) {
            return Err(CalibrationError::MalformedRecord {
                line: i + 1,
                reason: format!("score {} outside [0, 1]", r.score),
            });
        }
        out.push(r);
    }
    Ok(out)
}
