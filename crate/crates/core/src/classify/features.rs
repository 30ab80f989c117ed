use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::ClickbaitPost;
use crate::textproc::{ngrams, pos_tag, tokenize, IdfTable, PosTagger, TextError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Multiplier applied to every post-origin feature.
    pub post_weight: f64,
    /// Share of document-origin features kept by chi-square selection.
    pub doc_keep_fraction: f64,
    pub use_pos: bool,
    pub ngram_orders: Vec<usize>,
    /// Scale each vector to unit length after weighting.
    pub l2_normalize: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            post_weight: 4.0,
            doc_keep_fraction: 0.7,
            use_pos: true,
            ngram_orders: vec![1, 2],
            l2_normalize: false,
        }
    }
}

/// Sparse features keyed by `origin/kind/order/weighting/gram`, for example
/// `post/word/1/tf/you` or `doc/pos/2/tfidf/DET NOUN`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub BTreeMap<String, f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: &str) -> f64 {
        self.0.get(id).copied().unwrap_or(0.0)
    }
}

pub fn is_post_feature(id: &str) -> bool {
    id.starts_with("post/")
}

/// Token and POS streams of one text.
struct Streams {
    words: Vec<String>,
    tags: Vec<String>,
}

fn streams(text: &str, tagger: &dyn PosTagger, use_pos: bool) -> Result<Streams, TextError> {
    let seq = tokenize(text);
    let tags = if use_pos && !seq.is_empty() {
        pos_tag(tagger, &seq)?.into_iter().map(|t| t.as_str().to_string()).collect()
    } else {
        Vec::new()
    };
    Ok(Streams {
        words: seq.folded,
        tags,
    })
}

/// N-gram counts keyed by `kind/order/gram`; the key also indexes idf tables.
fn gram_counts(s: &Streams, orders: &[usize]) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    for (kind, seq) in [("word", &s.words), ("pos", &s.tags)] {
        for &n in orders {
            let Ok(grams) = ngrams(seq, n) else { continue };
            for (g, c) in grams {
                *out.entry(format!("{kind}/{n}/{}", g.join(" "))).or_insert(0) += c;
            }
        }
    }
    out
}

fn document_text(post: &ClickbaitPost) -> String {
    let mut parts = Vec::with_capacity(post.paragraphs.len() + 1);
    parts.push(post.target_title.as_str());
    parts.extend(post.paragraphs.iter().map(String::as_str));
    parts.join("\n")
}

/// Gram keys of a post used as one idf document: post text and linked
/// document together.
pub fn idf_terms(post: &ClickbaitPost, tagger: &dyn PosTagger, cfg: &FeatureConfig) -> Result<Vec<String>, TextError> {
    let mut keys: Vec<String> = gram_counts(&streams(&post.post_text, tagger, cfg.use_pos)?, &cfg.ngram_orders)
        .into_keys()
        .collect();
    keys.extend(gram_counts(&streams(&document_text(post), tagger, cfg.use_pos)?, &cfg.ngram_orders).into_keys());
    Ok(keys)
}

/// Builds the gram idf table over training posts.
pub fn build_feature_idf(
    posts: &[&ClickbaitPost],
    tagger: &dyn PosTagger,
    cfg: &FeatureConfig,
) -> Result<IdfTable, TextError> {
    let docs = posts
        .iter()
        .map(|p| idf_terms(p, tagger, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    IdfTable::from_documents(docs, "training posts")
}

/// Post grams weighted by tf and by tf-idf (both times `post_weight`);
/// document grams (title plus paragraphs) weighted by tf-idf.
pub fn extract_features(
    post: &ClickbaitPost,
    idf: &IdfTable,
    tagger: &dyn PosTagger,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, TextError> {
    let mut v = BTreeMap::new();
    let post_grams = gram_counts(&streams(&post.post_text, tagger, cfg.use_pos)?, &cfg.ngram_orders);
    for (key, tf) in post_grams {
        let tf = tf as f64;
        v.insert(format!("post/{}", weighting(&key, "tf")), tf * cfg.post_weight);
        v.insert(format!("post/{}", weighting(&key, "tfidf")), tf * idf.get(&key) * cfg.post_weight);
    }
    let doc_grams = gram_counts(&streams(&document_text(post), tagger, cfg.use_pos)?, &cfg.ngram_orders);
    for (key, tf) in doc_grams {
        v.insert(format!("doc/{}", weighting(&key, "tfidf")), tf as f64 * idf.get(&key));
    }
    if cfg.l2_normalize {
        let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.values_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(FeatureVector(v))
}

/// `kind/order/gram` to `kind/order/weighting/gram`.
fn weighting(key: &str, w: &str) -> String {
    let mut it = key.splitn(3, '/');
    let (kind, order, gram) = (it.next().unwrap_or(""), it.next().unwrap_or(""), it.next().unwrap_or(""));
    format!("{kind}/{order}/{w}/{gram}")
}

/// Maps feature ids to dense column indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl FeatureSpace {
    pub fn new(names: impl IntoIterator<Item = String>) -> Self {
        let mut names: Vec<String> = names.into_iter().collect();
        names.sort();
        names.dedup();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Sparse row over this space; features outside it are dropped.
    pub fn project(&self, v: &FeatureVector) -> Vec<(usize, f64)> {
        v.0.iter()
            .filter_map(|(k, &x)| self.position(k).map(|i| (i, x)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Span, SpoilerType, Split};
    use crate::textproc::LexiconTagger;

    fn post(text: &str, paragraphs: &[&str]) -> ClickbaitPost {
        ClickbaitPost {
            id: "x".into(),
            platform: None,
            post_text: text.into(),
            target_title: String::new(),
            paragraphs: paragraphs.iter().map(|s| s.to_string()).collect(),
            spoilers: vec![],
            spoiler_positions: vec![Span::new(0, 0, 0)],
            spoiler_type: SpoilerType::Phrase,
            split: Split::Train,
        }
    }

    #[test]
    fn empty_post_empty_vector() {
        let idf = IdfTable::from_entries([], Some(1), "t");
        let v = extract_features(&post("", &[]), &idf, &LexiconTagger::bundled(), &FeatureConfig::default()).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn post_tf_scaled_by_weight() {
        let idf = IdfTable::from_entries([("word/1/a".to_string(), 2.0)], Some(3), "t");
        let v = extract_features(&post("a a b", &[]), &idf, &LexiconTagger::bundled(), &FeatureConfig::default()).unwrap();
        assert_eq!(v.get("post/word/1/tf/a"), 8.0);
        assert_eq!(v.get("post/word/1/tf/b"), 4.0);
        assert_eq!(v.get("post/word/1/tfidf/a"), 2.0 * 2.0 * 4.0);
        assert_eq!(v.get("post/word/1/tfidf/b"), IdfTable::formula(3, 0) * 4.0);
        assert_eq!(v.get("post/word/2/tf/a a"), 4.0);
        assert!(v.0.keys().any(|k| k.starts_with("post/pos/1/tf/")));
    }

    #[test]
    fn doc_features_are_tfidf() {
        let idf = IdfTable::from_entries([("word/1/cat".to_string(), 1.5)], Some(3), "t");
        let cfg = FeatureConfig {
            use_pos: false,
            ..FeatureConfig::default()
        };
        let v = extract_features(&post("", &["cat dog cat"]), &idf, &LexiconTagger::bundled(), &cfg).unwrap();
        assert_eq!(v.get("doc/word/1/tfidf/cat"), 3.0);
        assert!(!v.0.keys().any(|k| k.contains("/tf/")));
        assert!(!v.0.keys().any(|k| k.contains("/pos/")));
    }

    #[test]
    fn unloaded_tagger_errors_only_with_pos() {
        let idf = IdfTable::from_entries([], Some(1), "t");
        let p = post("hello", &[]);
        assert!(extract_features(&p, &idf, &LexiconTagger::default(), &FeatureConfig::default()).is_err());
        let cfg = FeatureConfig {
            use_pos: false,
            ..FeatureConfig::default()
        };
        assert!(extract_features(&p, &idf, &LexiconTagger::default(), &cfg).is_ok());
    }

    #[test]
    fn l2_normalization() {
        let idf = IdfTable::from_entries([], Some(1), "t");
        let cfg = FeatureConfig {
            l2_normalize: true,
            ..FeatureConfig::default()
        };
        let v = extract_features(&post("a b c", &["d e"]), &idf, &LexiconTagger::bundled(), &cfg).unwrap();
        let norm: f64 = v.0.values().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn idf_keys_match_feature_keys() {
        let p = post("a b", &["c"]);
        let tagger = LexiconTagger::bundled();
        let cfg = FeatureConfig::default();
        let idf = build_feature_idf(&[&p], &tagger, &cfg).unwrap();
        assert!(idf.contains("word/1/a"));
        assert!(idf.contains("word/2/a b"));
        assert!(idf.contains("word/1/c"));
    }

    #[test]
    fn feature_space_projection() {
        let space = FeatureSpace::new(["b".to_string(), "a".to_string(), "a".to_string()]);
        assert_eq!(space.names(), ["a", "b"]);
        let v = FeatureVector(BTreeMap::from([("b".to_string(), 2.0), ("z".to_string(), 1.0)]));
        assert_eq!(space.project(&v), vec![(1, 2.0)]);
    }
}
