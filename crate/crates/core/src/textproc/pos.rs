use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{TextError, TokenSeq};

/// Coarse universal tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Conj,
    Prt,
    Punct,
    X,
}

impl Tag {
    pub const ALL: [Tag; 12] = [
        Tag::Noun,
        Tag::Verb,
        Tag::Adj,
        Tag::Adv,
        Tag::Pron,
        Tag::Det,
        Tag::Adp,
        Tag::Num,
        Tag::Conj,
        Tag::Prt,
        Tag::Punct,
        Tag::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Noun => "NOUN",
            Tag::Verb => "VERB",
            Tag::Adj => "ADJ",
            Tag::Adv => "ADV",
            Tag::Pron => "PRON",
            Tag::Det => "DET",
            Tag::Adp => "ADP",
            Tag::Num => "NUM",
            Tag::Conj => "CONJ",
            Tag::Prt => "PRT",
            Tag::Punct => "PUNCT",
            Tag::X => "X",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tag {s:?}"))
    }
}

pub trait PosTagger: Send + Sync {
    /// One tag per input token.
    fn tag(&self, tokens: &[String]) -> Result<Vec<Tag>, TextError>;
}

pub fn pos_tag(tagger: &dyn PosTagger, seq: &TokenSeq) -> Result<Vec<Tag>, TextError> {
    tagger.tag(&seq.tokens)
}

const BUNDLED_LEXICON: &str = include_str!("lexicon.tsv");

/// Lexicon lookup with inflection stripping and suffix heuristics.
///
/// `LexiconTagger::default()` holds no model and refuses to tag; use
/// [`LexiconTagger::bundled`] or [`LexiconTagger::from_file`].
#[derive(Debug, Clone, Default)]
pub struct LexiconTagger {
    lexicon: Option<HashMap<String, Tag>>,
}

impl LexiconTagger {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well-formed")
    }

    /// Reads `token<TAB>tag` lines.
    pub fn from_file(path: &Path) -> Result<Self, TextError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut lexicon = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: String| TextError::MalformedLexiconLine { line: i + 1, reason };
            let (token, tag) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected token<TAB>tag".into()))?;
            let tag: Tag = tag.trim().parse().map_err(malformed)?;
            lexicon.entry(token.to_lowercase()).or_insert(tag);
        }
        Ok(Self { lexicon: Some(lexicon) })
    }

    fn tag_one(lexicon: &HashMap<String, Tag>, token: &str, prev: Option<Tag>) -> Tag {
        if !token.chars().any(char::is_alphanumeric) {
            return Tag::Punct;
        }
        if is_numeric(token) {
            return Tag::Num;
        }
        let lower = token.to_lowercase();
        if let Some(&tag) = lexicon.get(&lower) {
            return tag;
        }
        if let Some(tag) = inflected(lexicon, &lower, prev) {
            return tag;
        }
        if !lower.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '-') {
            return Tag::X;
        }
        suffix_rule(&lower).unwrap_or(Tag::Noun)
    }
}

impl PosTagger for LexiconTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<Tag>, TextError> {
        let lexicon = self.lexicon.as_ref().ok_or(TextError::TaggerNotLoaded)?;
        let mut tags = Vec::with_capacity(tokens.len());
        let mut prev = None;
        for token in tokens {
            let tag = Self::tag_one(lexicon, token, prev);
            tags.push(tag);
            prev = Some(tag);
        }
        Ok(tags)
    }
}

fn is_numeric(token: &str) -> bool {
    let body = token.trim_start_matches(['+', '-']);
    let Some(first) = body.chars().next() else {
        return false;
    };
    if !first.is_ascii_digit() {
        return false;
    }
    let digits_end = body
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | ',' | ':' | '/' | '%')))
        .unwrap_or(body.len());
    matches!(&body[digits_end..], "" | "s" | "st" | "nd" | "rd" | "th" | "k" | "m")
}

fn inflected(lexicon: &HashMap<String, Tag>, lower: &str, prev: Option<Tag>) -> Option<Tag> {
    let candidates: Vec<(String, &str)> = [
        ("ies", "y"),
        ("es", ""),
        ("s", ""),
        ("ied", "y"),
        ("ed", ""),
        ("ed", "e"),
        ("ing", ""),
        ("ing", "e"),
        ("er", ""),
        ("est", ""),
    ]
    .iter()
    .filter_map(|&(suffix, repl)| {
        lower
            .strip_suffix(suffix)
            .filter(|base| base.len() >= 2)
            .map(|base| (format!("{base}{repl}"), suffix))
    })
    .collect();
    for (base, suffix) in candidates {
        let Some(&base_tag) = lexicon.get(&base) else {
            continue;
        };
        let tag = match (base_tag, suffix) {
            (Tag::Verb, "ed" | "ied" | "ing") => Tag::Verb,
            (Tag::Verb, "s" | "es" | "ies") => match prev {
                Some(Tag::Noun | Tag::Pron) => Tag::Verb,
                Some(Tag::Det | Tag::Adj | Tag::Num) => Tag::Noun,
                _ => Tag::Verb,
            },
            (Tag::Noun, "s" | "es" | "ies") => Tag::Noun,
            (Tag::Adj, "er" | "est") => Tag::Adj,
            _ => continue,
        };
        return Some(tag);
    }
    None
}

fn suffix_rule(lower: &str) -> Option<Tag> {
    const RULES: &[(&str, Tag)] = &[
        ("ly", Tag::Adv),
        ("ing", Tag::Verb),
        ("ed", Tag::Verb),
        ("ize", Tag::Verb),
        ("ise", Tag::Verb),
        ("ous", Tag::Adj),
        ("ful", Tag::Adj),
        ("able", Tag::Adj),
        ("ible", Tag::Adj),
        ("ive", Tag::Adj),
        ("less", Tag::Adj),
        ("ical", Tag::Adj),
        ("ic", Tag::Adj),
        ("tion", Tag::Noun),
        ("sion", Tag::Noun),
        ("ment", Tag::Noun),
        ("ness", Tag::Noun),
        ("ity", Tag::Noun),
        ("ship", Tag::Noun),
        ("ism", Tag::Noun),
        ("ist", Tag::Noun),
    ];
    RULES
        .iter()
        .find(|(suffix, _)| lower.len() > suffix.len() + 1 && lower.ends_with(suffix))
        .map(|&(_, tag)| tag)
}
