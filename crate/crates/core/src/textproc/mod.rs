//! Text processing substrate shared by classification, retrieval, and metrics:
//! tokenization, Porter stemming, n-gram counting, idf tables, and a coarse
//! part-of-speech tagger.

mod idf;
mod pos;
mod stem;
mod tokenize;

use std::collections::HashMap;
use std::hash::Hash;

pub use idf::{build_idf, IdfTable};
pub use pos::{pos_tag, LexiconTagger, PosTagger, Tag};
pub use stem::{porter_step, stem};
pub use tokenize::{tokenize, TokenSeq};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidN(usize),
    #[error("cannot build an idf table from an empty collection")]
    EmptyCollection,
    #[error("malformed idf line {line}: {reason}")]
    MalformedIdfLine { line: usize, reason: String },
    #[error("malformed lexicon line {line}: {reason}")]
    MalformedLexiconLine { line: usize, reason: String },
    #[error("part-of-speech tagger has no model loaded")]
    TaggerNotLoaded,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counts every contiguous n-gram of `seq`. Keys borrow from the input.
pub fn ngrams<T: Eq + Hash>(seq: &[T], n: usize) -> Result<HashMap<&[T], usize>, TextError> {
    if n < 1 {
        return Err(TextError::InvalidN(n));
    }
    let mut counts = HashMap::new();
    if seq.len() >= n {
        for window in seq.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    Ok(counts)
}
