use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{bleu, meteor, metric_tokens, precision_at_1, MetricError, P1Mode, SpoilerPrediction};
use crate::calibration::{Metric, ModelFamily, ThresholdSet};
use crate::corpus::{Corpus, SpoilerType};

pub const BLEU: &str = "bleu";
pub const METEOR: &str = "meteor";
pub const P_AT_1: &str = "p_at_1";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    /// Forces one Precision@1 rule; by default predictions with a ranking use
    /// the retrieval rule and the rest the containing-paragraph rule.
    pub p1_mode: Option<P1Mode>,
    /// Threshold family for predictions that do not name one.
    pub default_family: ModelFamily,
    pub include_multipart: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Share of posts routed to their gold type, in percent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routing_accuracy: Option<f64>,
    pub excluded_multipart: usize,
    #[serde(default)]
    pub generator_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRow {
    pub post_id: String,
    pub gold_type: SpoilerType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routed_type: Option<SpoilerType>,
    pub family: ModelFamily,
    pub abstained: bool,
    /// Scores in [0, 1], keyed by metric name.
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub posts: usize,
    pub abstained: usize,
    /// Mean scores times 100.
    pub means: BTreeMap<String, f64>,
    /// Posts scoring at or above their high-confidence threshold.
    pub high_confidence: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: RunMeta,
    pub overall: Summary,
    pub by_type: BTreeMap<SpoilerType, Summary>,
    pub rows: Vec<PostRow>,
}

fn summarize<'a>(rows: impl IntoIterator<Item = &'a PostRow>, thresholds: &ThresholdSet) -> Summary {
    let mut s = Summary::default();
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for row in rows {
        s.posts += 1;
        s.abstained += usize::from(row.abstained);
        for (name, &v) in &row.scores {
            *sums.entry(name.clone()).or_default() += v;
            let Ok(metric) = name.parse::<Metric>() else {
                continue;
            };
            if let Some(t) = thresholds.get(metric, row.gold_type, row.family) {
                let count = s.high_confidence.entry(name.clone()).or_default();
                if !row.abstained && v >= t {
                    *count += 1;
                }
            }
        }
    }
    if s.posts > 0 {
        s.means = sums.into_iter().map(|(k, v)| (k, 100.0 * v / s.posts as f64)).collect();
    }
    s
}

impl EvalReport {
    fn resummarize(&mut self, thresholds: &ThresholdSet) {
        self.overall = summarize(&self.rows, thresholds);
        let types: HashSet<SpoilerType> = self.rows.iter().map(|r| r.gold_type).collect();
        self.by_type = types
            .into_iter()
            .map(|t| (t, summarize(self.rows.iter().filter(|r| r.gold_type == t), thresholds)))
            .collect();
    }

    /// Adds scores from an external scorer (such as BERTScore) and refreshes
    /// the summaries. Rows without a score get 0.
    pub fn add_external_scores(
        &mut self,
        metric: &str,
        scores: &HashMap<String, f64>,
        thresholds: &ThresholdSet,
    ) -> Result<(), MetricError> {
        let known: HashSet<&str> = self.rows.iter().map(|r| r.post_id.as_str()).collect();
        if let Some(id) = scores.keys().find(|id| !known.contains(id.as_str())) {
            return Err(MetricError::UnknownPostId(id.clone()));
        }
        for row in &mut self.rows {
            let v = if row.abstained {
                0.0
            } else {
                scores.get(&row.post_id).copied().unwrap_or(0.0).clamp(0.0, 1.0)
            };
            row.scores.insert(metric.to_string(), v);
        }
        self.resummarize(thresholds);
        Ok(())
    }

    fn metric_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = vec![BLEU.into(), METEOR.into()];
        for k in self.overall.means.keys() {
            if k != BLEU && k != METEOR && k != P_AT_1 {
                cols.push(k.clone());
            }
        }
        cols.push(P_AT_1.into());
        cols
    }

    /// Plain-text table: per metric the mean with the high-confidence count
    /// in brackets.
    pub fn render_table(&self) -> String {
        let cols = self.metric_columns();
        let mut out = String::new();
        if let Some(label) = &self.meta.label {
            let _ = writeln!(out, "{label}");
        }
        let _ = write!(out, "{:<10} {:>6} {:>6}", "type", "posts", "abst.");
        for c in &cols {
            let _ = write!(out, " {:>14}", column_title(c));
        }
        out.push('\n');
        let mut scopes: Vec<(String, &Summary)> =
            self.by_type.iter().map(|(t, s)| (t.to_string(), s)).collect();
        scopes.push(("overall".into(), &self.overall));
        for (name, s) in scopes {
            let _ = write!(out, "{:<10} {:>6} {:>6}", name, s.posts, s.abstained);
            for c in &cols {
                let cell = match (s.means.get(c), s.high_confidence.get(c)) {
                    (Some(m), Some(h)) => format!("{m:.2} ({h})"),
                    (Some(m), None) => format!("{m:.2}"),
                    (None, _) => "-".into(),
                };
                let _ = write!(out, " {cell:>14}");
            }
            out.push('\n');
        }
        if self.meta.excluded_multipart > 0 {
            let _ = writeln!(out, "excluded multipart posts: {}", self.meta.excluded_multipart);
        }
        if let Some(acc) = self.meta.routing_accuracy {
            let _ = writeln!(out, "routing accuracy: {acc:.2}");
        }
        out
    }

    /// Machine-readable form: one meta line, one line per summary scope, then
    /// one line per post.
    pub fn write_records(&self, mut out: impl Write) -> std::io::Result<()> {
        let line = |v: serde_json::Value| serde_json::to_string(&v).expect("serializable");
        writeln!(out, "{}", line(json!({"kind": "meta", "meta": self.meta})))?;
        writeln!(out, "{}", line(json!({"kind": "summary", "scope": "overall", "summary": self.overall})))?;
        for (t, s) in &self.by_type {
            writeln!(out, "{}", line(json!({"kind": "summary", "scope": t, "summary": s})))?;
        }
        for row in &self.rows {
            writeln!(out, "{}", line(json!({"kind": "post", "row": row})))?;
        }
        Ok(())
    }
}

fn column_title(metric: &str) -> String {
    match metric {
        BLEU => "BLEU".into(),
        METEOR => "METEOR".into(),
        P_AT_1 => "P@1".into(),
        "bertscore" => "BERTScore".into(),
        other => other.to_string(),
    }
}

/// Scores every prediction against its post's gold spoiler. Multipart posts
/// are skipped (and counted) unless `opts.include_multipart` is set.
pub fn evaluate_run(
    preds: &[SpoilerPrediction],
    corpus: &Corpus,
    thresholds: &ThresholdSet,
    opts: EvalOptions,
) -> Result<EvalReport, MetricError> {
    if preds.is_empty() {
        return Err(MetricError::EmptyRun);
    }
    let by_id: HashMap<&str, usize> = corpus
        .posts
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.as_str(), i))
        .collect();
    let mut seen = HashSet::new();
    let mut report = EvalReport::default();
    for pred in preds {
        if !seen.insert(pred.post_id.as_str()) {
            return Err(MetricError::DuplicatePrediction(pred.post_id.clone()));
        }
        let post = by_id
            .get(pred.post_id.as_str())
            .map(|&i| &corpus.posts[i])
            .ok_or_else(|| MetricError::UnknownPostId(pred.post_id.clone()))?;
        if post.spoiler_type == SpoilerType::Multipart && !opts.include_multipart {
            report.meta.excluded_multipart += 1;
            continue;
        }
        let mut scores = BTreeMap::new();
        if pred.abstained {
            for m in [BLEU, METEOR, P_AT_1] {
                scores.insert(m.to_string(), 0.0);
            }
        } else {
            let cand = metric_tokens(&pred.text);
            let gold = metric_tokens(&post.gold_text());
            scores.insert(BLEU.to_string(), bleu(&cand, &gold)?);
            scores.insert(METEOR.to_string(), meteor(&cand, &gold)?);
            let mode = opts.p1_mode.unwrap_or(if pred.ranking.is_some() {
                P1Mode::Retrieval
            } else {
                P1Mode::Qa
            });
            scores.insert(P_AT_1.to_string(), f64::from(precision_at_1(pred, post, mode)?));
        }
        report.rows.push(PostRow {
            post_id: pred.post_id.clone(),
            gold_type: post.spoiler_type,
            routed_type: None,
            family: pred.family.unwrap_or(opts.default_family),
            abstained: pred.abstained,
            scores,
            note: None,
        });
    }
    report.rows.sort_by(|a, b| a.post_id.cmp(&b.post_id));
    report.resummarize(thresholds);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ClickbaitPost, Span, Split};

    fn corpus() -> Corpus {
        let mk = |id: &str, ty: SpoilerType, para: &str, spoiler: &str| ClickbaitPost {
            id: id.into(),
            platform: None,
            post_text: "q".into(),
            target_title: "t".into(),
            paragraphs: vec!["filler text".into(), para.into()],
            spoilers: vec![spoiler.into()],
            spoiler_positions: vec![Span::new(1, 0, spoiler.chars().count())],
            spoiler_type: ty,
            split: Split::Test,
        };
        Corpus {
            posts: vec![
                mk("a", SpoilerType::Phrase, "Tom Hanks did it", "Tom Hanks"),
                mk("b", SpoilerType::Passage, "Because the sky is blue today", "Because the sky is blue"),
                mk("c", SpoilerType::Multipart, "x y", "x"),
            ],
            schema_version: String::new(),
        }
    }

    fn gold_preds(c: &Corpus) -> Vec<SpoilerPrediction> {
        c.posts
            .iter()
            .map(|p| SpoilerPrediction::text(p.id.clone(), p.gold_text()))
            .collect()
    }

    #[test]
    fn perfect_run() {
        let c = corpus();
        let r = evaluate_run(&gold_preds(&c), &c, &ThresholdSet::published(), EvalOptions::default()).unwrap();
        assert_eq!(r.meta.excluded_multipart, 1);
        assert_eq!(r.rows.len(), 2);
        for m in [BLEU, METEOR, P_AT_1] {
            assert_eq!(r.overall.means[m], 100.0);
        }
        assert_eq!(r.overall.high_confidence[BLEU], 2);
        assert_eq!(r.by_type[&SpoilerType::Phrase].high_confidence[METEOR], 1);
        assert!(!r.overall.high_confidence.contains_key(P_AT_1));
    }

    #[test]
    fn abstention_scores_zero() {
        let c = corpus();
        let preds = vec![SpoilerPrediction::abstain("a"), SpoilerPrediction::text("b", "Because the sky is blue")];
        let r = evaluate_run(&preds, &c, &ThresholdSet::published(), EvalOptions::default()).unwrap();
        assert_eq!(r.overall.abstained, 1);
        assert_eq!(r.overall.means[BLEU], 50.0);
        assert_eq!(r.overall.high_confidence[BLEU], 1);
    }

    #[test]
    fn errors() {
        let c = corpus();
        let t = ThresholdSet::published();
        let o = EvalOptions::default();
        assert!(matches!(evaluate_run(&[], &c, &t, o), Err(MetricError::EmptyRun)));
        let dup = vec![SpoilerPrediction::text("a", "x"), SpoilerPrediction::text("a", "y")];
        assert!(matches!(evaluate_run(&dup, &c, &t, o), Err(MetricError::DuplicatePrediction(_))));
        let unknown = vec![SpoilerPrediction::text("zz", "x")];
        assert!(matches!(evaluate_run(&unknown, &c, &t, o), Err(MetricError::UnknownPostId(_))));
    }

    #[test]
    fn external_scores_and_rendering() {
        let c = corpus();
        let t = ThresholdSet::published();
        let mut r = evaluate_run(&gold_preds(&c), &c, &t, EvalOptions::default()).unwrap();
        let scores = HashMap::from([("a".to_string(), 0.9), ("b".to_string(), 0.5)]);
        r.add_external_scores("bertscore", &scores, &t).unwrap();
        assert!((r.overall.means["bertscore"] - 70.0).abs() < 1e-9);
        // phrase qa threshold 0.8, passage qa 0.6
        assert_eq!(r.overall.high_confidence["bertscore"], 1);
        let table = r.render_table();
        assert!(table.contains("BERTScore"));
        assert!(table.contains("100.00 (2)"));
        let mut buf = Vec::new();
        r.write_records(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 1 + 2 + 2);
        let bad = HashMap::from([("nope".to_string(), 0.1)]);
        assert!(r.add_external_scores("bertscore", &bad, &t).is_err());
    }

    #[test]
    fn means_consistent_with_rows() {
        let c = corpus();
        let preds = vec![
            SpoilerPrediction::text("a", "Tom"),
            SpoilerPrediction::text("b", "the sky is blue today"),
        ];
        let r = evaluate_run(&preds, &c, &ThresholdSet::published(), EvalOptions::default()).unwrap();
        for (m, mean) in &r.overall.means {
            let sum: f64 = r.rows.iter().map(|row| row.scores[m]).sum();
            assert!((mean - 100.0 * sum / r.rows.len() as f64).abs() < 1e-9);
            assert!(r.overall.high_confidence.get(m).map_or(true, |&h| h <= r.rows.len()));
        }
    }
}
