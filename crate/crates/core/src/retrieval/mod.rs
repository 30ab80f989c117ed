//! Ranks a post's linked-document paragraphs against the post text used as
//! a query. Every document is its own tiny collection.

mod rm3;
mod runfile;
mod tune;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::ModelFamily;
use crate::corpus::{ClickbaitPost, TITLE};
use crate::metrics::SpoilerPrediction;
use crate::textproc::{stem, tokenize};

pub use rm3::{expand_rm3, Rm3Params};
pub use runfile::{read_run, write_run, RunRecord};
pub use tune::{bm25_grid, grid_search_bm25, GridSearchResult};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("post {0} has no paragraphs to rank")]
    EmptyDocument(String),
    #[error("invalid feedback parameters: {0}")]
    InvalidFeedbackParams(String),
    #[error("no training posts for the grid search")]
    EmptyTrainingSet,
    #[error("run file line {line}: {reason}")]
    MalformedRun { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Turns text into index terms.
///
/// Terms are casefolded tokens; tokens without any alphanumeric character are
/// dropped. Stemming and a stoplist are opt-in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Analyzer {
    pub stem: bool,
    pub stopwords: Option<HashSet<String>>,
}

impl Analyzer {
    /// Reads a stoplist with one word per line; `#` starts a comment.
    pub fn load_stoplist(path: &Path) -> std::io::Result<HashSet<String>> {
        let text = std::fs::read_to_string(path)?;
        Ok(text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect())
    }

    pub fn terms(&self, text: &str) -> Vec<String> {
        tokenize(text)
            .folded
            .into_iter()
            .filter(|t| t.chars().any(char::is_alphanumeric))
            .filter(|t| self.stopwords.as_ref().map_or(true, |s| !s.contains(t)))
            .map(|t| if self.stem { stem(&t) } else { t })
            .collect()
    }
}

/// A bag of query terms with (possibly fractional) weights, kept in first
/// occurrence order so score sums are reproducible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Query {
    pub terms: Vec<(String, f64)>,
}

impl Query {
    pub fn from_terms<S: AsRef<str>>(terms: &[S]) -> Self {
        let mut q = Query::default();
        let mut pos: HashMap<&str, usize> = HashMap::new();
        for t in terms {
            let t = t.as_ref();
            match pos.get(t) {
                Some(&i) => q.terms[i].1 += 1.0,
                None => {
                    pos.insert(t, q.terms.len());
                    q.terms.push((t.to_string(), 1.0));
                }
            }
        }
        q
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|(_, w)| w).sum()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.terms.iter().find(|(t, _)| t == term).map_or(0.0, |(_, w)| *w)
    }
}

/// Term statistics over one document's paragraphs.
#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphIndex {
    /// Corpus paragraph index of each entry ([`TITLE`] when the title is indexed).
    pub paragraph_ids: Vec<i32>,
    pub term_freqs: Vec<HashMap<String, usize>>,
    pub lengths: Vec<usize>,
    pub collection_freqs: HashMap<String, usize>,
    pub doc_freqs: HashMap<String, usize>,
    pub total_length: usize,
}

impl ParagraphIndex {
    pub fn from_paragraphs(paragraphs: &[(i32, Vec<String>)]) -> Self {
        let mut idx = ParagraphIndex {
            paragraph_ids: Vec::with_capacity(paragraphs.len()),
            term_freqs: Vec::with_capacity(paragraphs.len()),
            lengths: Vec::with_capacity(paragraphs.len()),
            collection_freqs: HashMap::new(),
            doc_freqs: HashMap::new(),
            total_length: 0,
        };
        for (id, terms) in paragraphs {
            let mut tf: HashMap<String, usize> = HashMap::new();
            for t in terms {
                *tf.entry(t.clone()).or_default() += 1;
                *idx.collection_freqs.entry(t.clone()).or_default() += 1;
            }
            for t in tf.keys() {
                *idx.doc_freqs.entry(t.clone()).or_default() += 1;
            }
            idx.paragraph_ids.push(*id);
            idx.lengths.push(terms.len());
            idx.total_length += terms.len();
            idx.term_freqs.push(tf);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn avg_length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.total_length as f64 / self.len() as f64
        }
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.collection_freqs.keys().map(String::as_str)
    }

    pub fn tf(&self, entry: usize, term: &str) -> usize {
        self.term_freqs[entry].get(term).copied().unwrap_or(0)
    }
}

/// Indexes the paragraphs of `post`, optionally with the title in front.
pub fn index_paragraphs(
    post: &ClickbaitPost,
    analyzer: &Analyzer,
    include_title: bool,
) -> Result<ParagraphIndex, RetrievalError> {
    if post.paragraphs.is_empty() {
        return Err(RetrievalError::EmptyDocument(post.id.clone()));
    }
    let mut docs = Vec::with_capacity(post.paragraphs.len() + 1);
    if include_title {
        docs.push((TITLE, analyzer.terms(&post.target_title)));
    }
    for (i, p) in post.paragraphs.iter().enumerate() {
        docs.push((i as i32, analyzer.terms(p)));
    }
    Ok(ParagraphIndex::from_paragraphs(&docs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub paragraph_index: i32,
    pub score: f64,
    pub rank: usize,
}

/// Sorts by descending score, ties toward the lower paragraph index, and
/// assigns ranks from 1.
fn rank(idx: &ParagraphIndex, scores: Vec<f64>) -> Vec<ScoredPassage> {
    let mut out: Vec<ScoredPassage> = scores
        .into_iter()
        .enumerate()
        .map(|(i, score)| ScoredPassage {
            paragraph_index: idx.paragraph_ids[i],
            score,
            rank: 0,
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.paragraph_index.cmp(&b.paragraph_index))
    });
    for (i, p) in out.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    out
}

pub fn bm25_idf(n: usize, df: usize) -> f64 {
    let (n, df) = (n as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

pub fn score_bm25(idx: &ParagraphIndex, query: &Query, p: Bm25Params) -> Vec<ScoredPassage> {
    let n = idx.len();
    let avg = idx.avg_length();
    let scores = (0..n)
        .map(|i| {
            let norm = if avg > 0.0 {
                1.0 - p.b + p.b * idx.lengths[i] as f64 / avg
            } else {
                1.0
            };
            let mut s = 0.0;
            for (t, w) in &query.terms {
                let tf = idx.tf(i, t) as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = idx.doc_freqs.get(t).copied().unwrap_or(0);
                s += w * bm25_idf(n, df) * tf * (p.k1 + 1.0) / (tf + p.k1 * norm);
            }
            s
        })
        .collect();
    rank(idx, scores)
}

pub const DEFAULT_MU: f64 = 1000.0;

pub fn score_qld(idx: &ParagraphIndex, query: &Query, mu: f64) -> Vec<ScoredPassage> {
    let total = idx.total_length as f64;
    let scores = (0..idx.len())
        .map(|i| {
            let len = idx.lengths[i] as f64;
            let mut s = 0.0;
            for (t, w) in &query.terms {
                let Some(&cf) = idx.collection_freqs.get(t) else {
                    continue;
                };
                let p_c = cf as f64 / total;
                let tf = idx.tf(i, t) as f64;
                s += w * ((tf + mu * p_c) / (len + mu)).ln();
            }
            s
        })
        .collect();
    rank(idx, scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Bm25,
    Qld,
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bm25" => Ok(Model::Bm25),
            "qld" => Ok(Model::Qld),
            other => Err(format!("unknown retrieval model {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub model: Model,
    pub bm25: Bm25Params,
    pub mu: f64,
    pub rm3: Option<Rm3Params>,
    pub include_title: bool,
    pub analyzer: Analyzer,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            model: Model::Bm25,
            bm25: Bm25Params::default(),
            mu: DEFAULT_MU,
            rm3: None,
            include_title: false,
            analyzer: Analyzer::default(),
        }
    }
}

impl RetrievalConfig {
    pub fn model_tag(&self) -> String {
        let mut tag = match self.model {
            Model::Bm25 => format!("bm25(k1={},b={})", self.bm25.k1, self.bm25.b),
            Model::Qld => format!("qld(mu={})", self.mu),
        };
        if let Some(r) = &self.rm3 {
            tag.push_str(&format!(
                "+rm3({},{},{})",
                r.fb_docs, r.fb_terms, r.orig_weight
            ));
        }
        tag
    }

    fn score(&self, idx: &ParagraphIndex, query: &Query) -> Vec<ScoredPassage> {
        match self.model {
            Model::Bm25 => score_bm25(idx, query, self.bm25),
            Model::Qld => score_qld(idx, query, self.mu),
        }
    }
}

impl fmt::Display for RetrievalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.model_tag())
    }
}

/// Full ranking of the post's paragraphs.
pub fn rank_post(post: &ClickbaitPost, cfg: &RetrievalConfig) -> Result<Vec<ScoredPassage>, RetrievalError> {
    let idx = index_paragraphs(post, &cfg.analyzer, cfg.include_title)?;
    rank_indexed(&idx, &Query::from_terms(&cfg.analyzer.terms(&post.post_text)), cfg)
}

fn rank_indexed(idx: &ParagraphIndex, query: &Query, cfg: &RetrievalConfig) -> Result<Vec<ScoredPassage>, RetrievalError> {
    let initial = cfg.score(idx, query);
    match &cfg.rm3 {
        None => Ok(initial),
        Some(r) => {
            let expanded = expand_rm3(idx, query, &initial, *r)?;
            Ok(cfg.score(idx, &expanded))
        }
    }
}

/// The rank-1 paragraph as a spoiler, with the full ranking attached.
pub fn retrieve_spoiler(post: &ClickbaitPost, cfg: &RetrievalConfig) -> Result<SpoilerPrediction, RetrievalError> {
    let ranking = rank_post(post, cfg)?;
    let top = ranking[0].paragraph_index;
    Ok(SpoilerPrediction {
        post_id: post.id.clone(),
        text: post.paragraph(top).unwrap_or_default().to_string(),
        abstained: false,
        paragraph: Some(top),
        ranking: Some(ranking),
        family: Some(ModelFamily::Retrieval),
    })
}
