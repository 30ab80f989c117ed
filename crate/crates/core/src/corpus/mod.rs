//! Corpus records, the line-delimited loader, validation, and split handling.

mod mapping;
mod types;
mod validate;

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use unicode_normalization::UnicodeNormalization;

pub use mapping::{FieldMapping, Normalization, TitleSpans};
pub use types::{
    char_slice, gold_paragraphs, ClickbaitPost, Corpus, Platform, Span, SpoilerType, Split, TITLE,
};
pub use validate::{duplicate_ids, validate_post, Violation, ViolationKind};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed record: {reason}")]
    MalformedRecord { file: String, line: usize, reason: String },
    #[error("{file}:{line}: required field {field:?} is missing under the field mapping")]
    SchemaMismatch { file: String, line: usize, field: String },
    #[error("field mapping line {line}: {reason}")]
    BadMapping { line: usize, reason: String },
}

/// A record that parsed but broke at least one invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub file: String,
    pub line: usize,
    pub post_id: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub corpus: Corpus,
    pub rejected: Vec<RejectedRecord>,
}

impl LoadReport {
    /// One JSON object per violation, for the validation report.
    pub fn write_violations(&self, mut out: impl Write) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            file: &'a str,
            line: usize,
            post_id: &'a str,
            #[serde(flatten)]
            violation: &'a Violation,
        }
        for r in &self.rejected {
            for v in &r.violations {
                let rec = Line {
                    file: &r.file,
                    line: r.line,
                    post_id: &r.post_id,
                    violation: v,
                };
                writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable"))?;
            }
        }
        Ok(())
    }
}

const SPLIT_FILES: [(&str, Split); 3] = [
    ("train.jsonl", Split::Train),
    ("validation.jsonl", Split::Validation),
    ("test.jsonl", Split::Test),
];

/// Loads a corpus and fails on the first record that breaks an invariant.
///
/// `path` is either one line-delimited file or a directory holding
/// `train.jsonl`, `validation.jsonl` and/or `test.jsonl`.
pub fn load_corpus(path: &Path, mapping: &FieldMapping) -> Result<Corpus, CorpusError> {
    let report = load_corpus_report(path, mapping)?;
    if let Some(r) = report.rejected.first() {
        return Err(CorpusError::MalformedRecord {
            file: r.file.clone(),
            line: r.line,
            reason: r
                .violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    Ok(report.corpus)
}

/// Loads a corpus, collecting invariant violations instead of failing.
/// Unparseable lines and missing required fields are still errors.
pub fn load_corpus_report(path: &Path, mapping: &FieldMapping) -> Result<LoadReport, CorpusError> {
    let files: Vec<(PathBuf, Option<Split>)> = if path.is_dir() {
        let found: Vec<_> = SPLIT_FILES
            .iter()
            .map(|(name, split)| (path.join(name), Some(*split)))
            .filter(|(p, _)| p.is_file())
            .collect();
        if found.is_empty() {
            return Err(CorpusError::UnreadableFile {
                path: path.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "directory holds none of train.jsonl, validation.jsonl, test.jsonl",
                ),
            });
        }
        found
    } else {
        let from_name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<Split>().ok());
        vec![(path.to_path_buf(), from_name)]
    };

    let mut report = LoadReport::default();
    report.corpus.schema_version = mapping.schema_version.clone();
    let mut lines_of = Vec::new();
    for (file, split_hint) in files {
        load_file(&file, mapping, split_hint, &mut report, &mut lines_of)?;
    }

    let mut seen = std::collections::HashSet::new();
    let mut keep = Vec::with_capacity(report.corpus.posts.len());
    for (post, (file, line)) in std::mem::take(&mut report.corpus.posts).into_iter().zip(lines_of) {
        if seen.insert(post.id.clone()) {
            keep.push(post);
        } else {
            report.rejected.push(RejectedRecord {
                file,
                line,
                post_id: post.id.clone(),
                violations: vec![Violation {
                    kind: ViolationKind::DuplicateId,
                    field: "id".into(),
                    detail: format!("id {:?} already used", post.id),
                }],
            });
        }
    }
    report.corpus.posts = keep;
    report.rejected.sort_by(|a, b| (&a.file, a.line).cmp(&(&b.file, b.line)));
    Ok(report)
}

fn load_file(
    path: &Path,
    mapping: &FieldMapping,
    split_hint: Option<Split>,
    report: &mut LoadReport,
    origins: &mut Vec<(String, usize)>,
) -> Result<(), CorpusError> {
    let unreadable = |source| CorpusError::UnreadableFile {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(fs::File::open(path).map_err(unreadable)?);
    let file = path.display().to_string();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(unreadable)?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            file: file.clone(),
            line: line_no,
            reason: e.to_string(),
        })?;
        let post = RecordReader {
            value: &value,
            mapping,
            file: &file,
            line: line_no,
        }
        .read(split_hint)?;
        let mut violations = validate_post(&post);
        if mapping.title_spans == TitleSpans::Reject {
            for (k, span) in post.spoiler_positions.iter().enumerate() {
                if span.paragraph == TITLE || span.end_paragraph == TITLE {
                    violations.push(Violation {
                        kind: ViolationKind::ParagraphOutOfRange,
                        field: format!("spoiler_positions[{k}]"),
                        detail: "title spans are disabled by the field mapping".into(),
                    });
                }
            }
        }
        if violations.is_empty() {
            report.corpus.posts.push(post);
            origins.push((file.clone(), line_no));
        } else {
            report.rejected.push(RejectedRecord {
                file: file.clone(),
                line: line_no,
                post_id: post.id,
                violations,
            });
        }
    }
    Ok(())
}

struct RecordReader<'a> {
    value: &'a Value,
    mapping: &'a FieldMapping,
    file: &'a str,
    line: usize,
}

impl RecordReader<'_> {
    fn lookup(&self, path: &str) -> Option<&Value> {
        path.split('.')
            .try_fold(self.value, |v, key| v.get(key))
            .filter(|v| !v.is_null())
    }

    fn required(&self, path: &str) -> Result<&Value, CorpusError> {
        self.lookup(path).ok_or_else(|| CorpusError::SchemaMismatch {
            file: self.file.to_string(),
            line: self.line,
            field: path.to_string(),
        })
    }

    fn malformed(&self, reason: String) -> CorpusError {
        CorpusError::MalformedRecord {
            file: self.file.to_string(),
            line: self.line,
            reason,
        }
    }

    fn text(&self, path: &str) -> Result<String, CorpusError> {
        match self.required(path)? {
            Value::String(s) => Ok(self.normalize(s)),
            Value::Number(n) => Ok(n.to_string()),
            Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|v| v.as_str().map(|s| self.normalize(s)))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| self.malformed(format!("{path}: expected strings")))?;
                Ok(parts.join(" "))
            }
            _ => Err(self.malformed(format!("{path}: expected a string"))),
        }
    }

    fn texts(&self, path: &str) -> Result<Vec<String>, CorpusError> {
        match self.required(path)? {
            Value::String(s) => Ok(vec![self.normalize(s)]),
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_str().map(|s| self.normalize(s)))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| self.malformed(format!("{path}: expected a list of strings"))),
            _ => Err(self.malformed(format!("{path}: expected a list of strings"))),
        }
    }

    fn first_text(&self, path: &str) -> Result<String, CorpusError> {
        let all = self.texts(path)?;
        all.into_iter()
            .next()
            .ok_or_else(|| self.malformed(format!("{path}: empty list")))
    }

    fn normalize(&self, s: &str) -> String {
        match self.mapping.normalize {
            Normalization::None => s.to_string(),
            Normalization::Nfc => s.nfc().collect(),
        }
    }

    fn read(&self, split_hint: Option<Split>) -> Result<ClickbaitPost, CorpusError> {
        let m = self.mapping;
        let platform = match m.platform.as_deref().and_then(|f| self.lookup(f)) {
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| self.malformed("platform: expected a string".into()))?
                    .parse()
                    .map_err(|e| self.malformed(e))?,
            ),
            None => None,
        };
        let positions = self.required(&m.spoiler_positions)?;
        let spoiler_positions: Vec<Span> = serde_json::from_value(positions.clone())
            .map_err(|e| self.malformed(format!("{}: {e}", m.spoiler_positions)))?;
        let spoiler_type = self
            .first_text(&m.spoiler_type)?
            .parse()
            .map_err(|e| self.malformed(e))?;
        let split = match m.split.as_deref() {
            Some(field) if self.lookup(field).is_some() => {
                self.first_text(field)?.parse().map_err(|e| self.malformed(e))?
            }
            _ => m
                .split_default
                .or(split_hint)
                .ok_or_else(|| CorpusError::SchemaMismatch {
                    file: self.file.to_string(),
                    line: self.line,
                    field: m.split.clone().unwrap_or_else(|| "split".into()),
                })?,
        };
        Ok(ClickbaitPost {
            id: self.text(&m.id)?,
            platform,
            post_text: self.text(&m.post_text)?,
            target_title: self.lookup(&m.target_title).map_or(Ok(String::new()), |_| self.text(&m.target_title))?,
            paragraphs: self.texts(&m.paragraphs)?,
            spoilers: self.texts(&m.spoilers)?,
            spoiler_positions,
            spoiler_type,
            split,
        })
    }
}

/// Writes the corpus in canonical layout, one record per line.
pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for post in &corpus.posts {
        writeln!(out, "{}", serde_json::to_string(post).expect("serializable"))?;
    }
    Ok(())
}

/// Partitions posts of the requested types by their stored split.
pub fn split_corpus<'a>(
    corpus: &'a Corpus,
    types: &[SpoilerType],
) -> (Vec<&'a ClickbaitPost>, Vec<&'a ClickbaitPost>, Vec<&'a ClickbaitPost>) {
    let wanted: BTreeSet<_> = types.iter().copied().collect();
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for post in corpus.posts.iter().filter(|p| wanted.contains(&p.spoiler_type)) {
        match post.split {
            Split::Train => train.push(post),
            Split::Validation => validation.push(post),
            Split::Test => test.push(post),
        }
    }
    (train, validation, test)
}
