use serde::{Deserialize, Serialize};

/// A tokenized string. `offsets` are byte ranges into the source text, so
/// `&source[start..end]` reproduces the corresponding entry of `tokens`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub offsets: Vec<(usize, usize)>,
    /// Lowercased view, parallel to `tokens`.
    pub folded: Vec<String>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The casefolded or surface view, depending on `casefold`.
    pub fn view(&self, casefold: bool) -> &[String] {
        if casefold {
            &self.folded
        } else {
            &self.tokens
        }
    }

    fn push(&mut self, source: &str, start: usize, end: usize) {
        let tok = &source[start..end];
        self.tokens.push(tok.to_string());
        self.folded.push(tok.to_lowercase());
        self.offsets.push((start, end));
    }
}

/// Splits on Unicode whitespace, then peels leading and trailing
/// non-alphanumeric characters off each chunk as single-character tokens.
/// Inner punctuation ("It's", "9.99") stays attached.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut seq = TokenSeq::default();
    let mut chunk_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                split_chunk(text, start, i, &mut seq);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(start) = chunk_start {
        split_chunk(text, start, text.len(), &mut seq);
    }
    seq
}

fn split_chunk(text: &str, start: usize, end: usize, seq: &mut TokenSeq) {
    let chunk = &text[start..end];
    let first_alnum = chunk.char_indices().find(|(_, c)| c.is_alphanumeric());
    let Some((core_start, _)) = first_alnum else {
        for (i, c) in chunk.char_indices() {
            seq.push(text, start + i, start + i + c.len_utf8());
        }
        return;
    };
    let (last_idx, last_char) = chunk
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .expect("chunk has an alphanumeric character");
    let core_end = last_idx + last_char.len_utf8();

    for (i, c) in chunk[..core_start].char_indices() {
        seq.push(text, start + i, start + i + c.len_utf8());
    }
    seq.push(text, start + core_start, start + core_end);
    for (i, c) in chunk[core_end..].char_indices() {
        let at = start + core_end + i;
        seq.push(text, at, at + c.len_utf8());
    }
}
