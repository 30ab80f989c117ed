use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{ClickbaitPost, SpoilerType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    EmptyId,
    DuplicateId,
    NoSpoilers,
    AlignmentMismatch,
    CardinalityMismatch,
    ParagraphOutOfRange,
    EmptySpan,
    SpanOutOfBounds,
    SpanTextMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub field: String,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, field: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            kind,
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} in {}: {}", self.kind, self.field, self.detail)
    }
}

/// Checks every per-record invariant. An empty result means the post is valid.
pub fn validate_post(post: &ClickbaitPost) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();

    if post.id.trim().is_empty() {
        out.push(Violation::new(EmptyId, "id", "id is empty"));
    }
    if post.spoilers.is_empty() {
        out.push(Violation::new(NoSpoilers, "spoilers", "no spoiler given"));
    }
    if post.spoilers.len() != post.spoiler_positions.len() {
        out.push(Violation::new(
            AlignmentMismatch,
            "spoiler_positions",
            format!("{} spoilers but {} spans", post.spoilers.len(), post.spoiler_positions.len()),
        ));
    }
    let spans = post.spoiler_positions.len();
    match post.spoiler_type {
        SpoilerType::Phrase if spans != 1 => out.push(Violation::new(
            CardinalityMismatch,
            "spoiler_positions",
            format!("phrase spoiler needs exactly one span, found {spans}"),
        )),
        SpoilerType::Multipart if spans < 2 => out.push(Violation::new(
            CardinalityMismatch,
            "spoiler_positions",
            format!("multipart spoiler needs at least two spans, found {spans}"),
        )),
        _ => {}
    }

    for (i, span) in post.spoiler_positions.iter().enumerate() {
        let field = format!("spoiler_positions[{i}]");
        let mut addressable = true;
        let ends: &[i32] = if span.is_single_paragraph() {
            &[span.paragraph]
        } else {
            &[span.paragraph, span.end_paragraph]
        };
        for &p in ends {
            if post.paragraph(p).is_none() {
                out.push(Violation::new(
                    ParagraphOutOfRange,
                    &field,
                    format!("paragraph {p} does not exist ({} paragraphs)", post.paragraphs.len()),
                ));
                addressable = false;
            }
        }
        if !addressable {
            continue;
        }
        let empty = if span.is_single_paragraph() {
            span.start >= span.end
        } else {
            span.end_paragraph < span.paragraph
        };
        if empty {
            out.push(Violation::new(
                EmptySpan,
                &field,
                format!("span [{}, {}) is empty or reversed", span.start, span.end),
            ));
            continue;
        }
        let start_len = post.paragraph(span.paragraph).map_or(0, |t| t.chars().count());
        let end_len = post.paragraph(span.end_paragraph).map_or(0, |t| t.chars().count());
        if span.start > start_len || span.end > end_len {
            out.push(Violation::new(
                SpanOutOfBounds,
                &field,
                format!(
                    "span [{}, {}) exceeds paragraph length {}",
                    span.start,
                    span.end,
                    end_len.max(start_len)
                ),
            ));
            continue;
        }
        let Some(spoiler) = post.spoilers.get(i) else {
            continue;
        };
        let text = post.span_text(span).unwrap_or_default();
        let matches = if span.is_single_paragraph() {
            text == *spoiler
        } else {
            collapse_ws(&text) == collapse_ws(spoiler)
        };
        if !matches {
            out.push(Violation::new(
                SpanTextMismatch,
                &field,
                format!("span covers {text:?} but spoiler is {spoiler:?}"),
            ));
        }
    }
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Ids that occur more than once, in first-repeat order.
pub fn duplicate_ids<'a>(posts: impl IntoIterator<Item = &'a ClickbaitPost>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for p in posts {
        if !seen.insert(p.id.as_str()) {
            dups.push(p.id.as_str());
        }
    }
    dups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::types::{Span, Split};

    fn post() -> ClickbaitPost {
        ClickbaitPost {
            id: "p1".into(),
            platform: None,
            post_text: "You won't believe what he said".into(),
            target_title: "A title".into(),
            paragraphs: vec!["First paragraph.".into(), "He said hello.".into()],
            spoilers: vec!["hello".into()],
            spoiler_positions: vec![Span::new(1, 8, 13)],
            spoiler_type: SpoilerType::Phrase,
            split: Split::Train,
        }
    }

    fn kinds(p: &ClickbaitPost) -> Vec<ViolationKind> {
        validate_post(p).into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn well_formed_post() {
        assert!(validate_post(&post()).is_empty());
    }

    #[test]
    fn span_beyond_paragraph() {
        let mut p = post();
        p.spoiler_positions[0] = Span::new(1, 8, 40);
        assert_eq!(kinds(&p), vec![ViolationKind::SpanOutOfBounds]);
    }

    #[test]
    fn phrase_with_two_spans() {
        let mut p = post();
        p.spoilers.push("First".into());
        p.spoiler_positions.push(Span::new(0, 0, 5));
        assert_eq!(kinds(&p), vec![ViolationKind::CardinalityMismatch]);
    }

    #[test]
    fn text_mismatch() {
        let mut p = post();
        p.spoilers[0] = "Hello".into();
        assert_eq!(kinds(&p), vec![ViolationKind::SpanTextMismatch]);
    }

    #[test]
    fn bad_paragraph_and_alignment() {
        let mut p = post();
        p.spoiler_positions[0] = Span::new(7, 0, 1);
        assert_eq!(kinds(&p), vec![ViolationKind::ParagraphOutOfRange]);
        p.spoiler_positions.clear();
        assert_eq!(
            kinds(&p),
            vec![ViolationKind::AlignmentMismatch, ViolationKind::CardinalityMismatch]
        );
    }

    #[test]
    fn multipart_needs_two_spans() {
        let mut p = post();
        p.spoiler_type = SpoilerType::Multipart;
        assert_eq!(kinds(&p), vec![ViolationKind::CardinalityMismatch]);
    }

    #[test]
    fn title_span_allowed() {
        let mut p = post();
        p.spoilers[0] = "title".into();
        p.spoiler_positions[0] = Span::new(-1, 2, 7);
        assert!(validate_post(&p).is_empty());
    }
}
