use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpoilerType {
    Phrase,
    Passage,
    Multipart,
}

impl SpoilerType {
    pub const ALL: [SpoilerType; 3] = [SpoilerType::Phrase, SpoilerType::Passage, SpoilerType::Multipart];

    pub fn as_str(self) -> &'static str {
        match self {
            SpoilerType::Phrase => "phrase",
            SpoilerType::Passage => "passage",
            SpoilerType::Multipart => "multipart",
        }
    }
}

impl fmt::Display for SpoilerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpoilerType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phrase" => Ok(SpoilerType::Phrase),
            "passage" => Ok(SpoilerType::Passage),
            "multipart" | "multi" => Ok(SpoilerType::Multipart),
            other => Err(format!("unknown spoiler type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Facebook,
    Reddit,
    Twitter,
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "facebook" => Ok(Platform::Facebook),
            "reddit" => Ok(Platform::Reddit),
            "twitter" => Ok(Platform::Twitter),
            other => Err(format!("unknown platform {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "validation" | "val" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Paragraph index of the document title.
pub const TITLE: i32 = -1;

/// Location of one spoiler part, in Unicode scalar values.
///
/// Most spans sit inside one paragraph (`paragraph == end_paragraph`); a
/// few passage spoilers run across a paragraph break, in which case `start`
/// indexes `paragraph` and `end` indexes `end_paragraph`.
///
/// Serialized as `[[paragraph, start], [end_paragraph, end]]`; the flat form
/// `[paragraph, start, end]` is accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub paragraph: i32,
    pub start: usize,
    pub end_paragraph: i32,
    pub end: usize,
}

impl Span {
    pub fn new(paragraph: i32, start: usize, end: usize) -> Self {
        Self {
            paragraph,
            start,
            end_paragraph: paragraph,
            end,
        }
    }

    pub fn across(paragraph: i32, start: usize, end_paragraph: i32, end: usize) -> Self {
        Self {
            paragraph,
            start,
            end_paragraph,
            end,
        }
    }

    pub fn is_single_paragraph(&self) -> bool {
        self.paragraph == self.end_paragraph
    }

    pub fn paragraphs(&self) -> impl Iterator<Item = i32> {
        self.paragraph..=self.end_paragraph
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [[self.paragraph as i64, self.start as i64], [self.end_paragraph as i64, self.end as i64]]
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Pairs([[i64; 2]; 2]),
            Flat([i64; 3]),
        }
        let (p, s, ep, e) = match Raw::deserialize(d)? {
            Raw::Pairs([[p, s], [ep, e]]) => (p, s, ep, e),
            Raw::Flat([p, s, e]) => (p, s, p, e),
        };
        if s < 0 || e < 0 {
            return Err(de::Error::custom("negative character offset"));
        }
        let idx = |v: i64| i32::try_from(v).map_err(|_| de::Error::custom("paragraph index out of range"));
        Ok(Span::across(idx(p)?, s as usize, idx(ep)?, e as usize))
    }
}

/// One corpus record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickbaitPost {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<Platform>,
    pub post_text: String,
    pub target_title: String,
    pub paragraphs: Vec<String>,
    pub spoilers: Vec<String>,
    pub spoiler_positions: Vec<Span>,
    pub spoiler_type: SpoilerType,
    pub split: Split,
}

impl ClickbaitPost {
    /// Paragraph text; index [`TITLE`] addresses the title.
    pub fn paragraph(&self, index: i32) -> Option<&str> {
        if index == TITLE {
            Some(&self.target_title)
        } else {
            usize::try_from(index)
                .ok()
                .and_then(|i| self.paragraphs.get(i))
                .map(String::as_str)
        }
    }

    /// Text covered by `span`, or `None` when it does not address valid text.
    /// Pieces of a multi-paragraph span are joined with a single space.
    pub fn span_text(&self, span: &Span) -> Option<String> {
        if span.end_paragraph < span.paragraph {
            return None;
        }
        if span.is_single_paragraph() {
            let text = self.paragraph(span.paragraph)?;
            return char_slice(text, span.start, span.end).map(str::to_string);
        }
        let mut pieces = Vec::new();
        for p in span.paragraphs() {
            let text = self.paragraph(p)?;
            let len = text.chars().count();
            let (from, to) = if p == span.paragraph {
                (span.start, len)
            } else if p == span.end_paragraph {
                (0, span.end)
            } else {
                (0, len)
            };
            pieces.push(char_slice(text, from, to)?);
        }
        Some(pieces.join(" "))
    }

    /// Reference spoiler text for scoring. Parts are joined with a space.
    pub fn gold_text(&self) -> String {
        self.spoilers.join(" ")
    }
}

/// Slices by Unicode scalar offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

/// Indices of all paragraphs that contain part of a gold spoiler.
pub fn gold_paragraphs(post: &ClickbaitPost) -> BTreeSet<i32> {
    post.spoiler_positions.iter().flat_map(Span::paragraphs).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub posts: Vec<ClickbaitPost>,
    pub schema_version: String,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClickbaitPost> {
        self.posts.iter().find(|p| p.id == id)
    }

    pub fn count(&self, ty: SpoilerType, split: Option<Split>) -> usize {
        self.posts
            .iter()
            .filter(|p| p.spoiler_type == ty && split.map_or(true, |s| p.split == s))
            .count()
    }
}
