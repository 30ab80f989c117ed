use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{TextError, TokenSeq};

/// Smoothed inverse document frequencies: `ln((N + 1) / (df + 1)) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    weights: HashMap<String, f64>,
    doc_count: Option<usize>,
    pub source_label: String,
}

impl IdfTable {
    pub fn formula(doc_count: usize, df: usize) -> f64 {
        ((doc_count as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
    }

    /// Builds a table from documents given as term sequences. Each document
    /// contributes at most one to a term's document frequency.
    pub fn from_documents<D, T>(docs: D, source_label: impl Into<String>) -> Result<Self, TextError>
    where
        D: IntoIterator,
        D::Item: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            let mut seen = HashSet::new();
            for term in doc {
                let term = term.as_ref();
                if seen.insert(term.to_string()) {
                    *df.entry(term.to_string()).or_insert(0) += 1;
                }
            }
        }
        if n == 0 {
            return Err(TextError::EmptyCollection);
        }
        let weights = df
            .into_iter()
            .map(|(t, d)| (t, Self::formula(n, d)))
            .collect();
        Ok(Self {
            weights,
            doc_count: Some(n),
            source_label: source_label.into(),
        })
    }

    pub fn doc_count(&self) -> Option<usize> {
        self.doc_count
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.weights.contains_key(term)
    }

    /// Weight for an unseen term. Without a recorded document count the
    /// largest stored weight stands in for the df = 0 value.
    pub fn unseen(&self) -> f64 {
        match self.doc_count {
            Some(n) => Self::formula(n, 0),
            None => self
                .weights
                .values()
                .copied()
                .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w))))
                .unwrap_or(1.0),
        }
    }

    pub fn get(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or_else(|| self.unseen())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Copy restricted to `terms`, keeping the document count so unseen
    /// lookups behave the same.
    pub fn subset<'a>(&self, terms: impl IntoIterator<Item = &'a str>) -> Self {
        let weights = terms
            .into_iter()
            .filter_map(|t| self.weights.get(t).map(|w| (t.to_string(), *w)))
            .collect();
        Self {
            weights,
            doc_count: self.doc_count,
            source_label: self.source_label.clone(),
        }
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, f64)>,
        doc_count: Option<usize>,
        source_label: impl Into<String>,
    ) -> Self {
        Self {
            weights: entries.into_iter().collect(),
            doc_count,
            source_label: source_label.into(),
        }
    }

    /// Reads `term<TAB>idf` lines. Optional header lines `#doc_count<TAB>N`
    /// and `#source<TAB>label` are recognized; other `#` lines are comments.
    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, default_label: &str) -> Result<Self, TextError> {
        let mut weights = HashMap::new();
        let mut doc_count = None;
        let mut label = default_label.to_string();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: &str| TextError::MalformedIdfLine {
                line: line_no,
                reason: reason.to_string(),
            };
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((key, value)) = meta.split_once('\t') {
                    match key {
                        "doc_count" => {
                            doc_count = Some(value.trim().parse().map_err(|_| malformed("bad doc_count"))?)
                        }
                        "source" => label = value.to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            let (term, value) = line.split_once('\t').ok_or_else(|| malformed("expected term<TAB>idf"))?;
            let w: f64 = value.trim().parse().map_err(|_| malformed("idf is not a number"))?;
            if !w.is_finite() || w < 0.0 {
                return Err(malformed("idf must be finite and non-negative"));
            }
            weights.insert(term.to_string(), w);
        }
        Ok(Self {
            weights,
            doc_count,
            source_label: label,
        })
    }

    /// Writes the table sorted by term. Floats use the shortest round-trip
    /// representation, so `load(dump(t)) == t`.
    pub fn dump(&self, mut out: impl Write) -> std::io::Result<()> {
        if let Some(n) = self.doc_count {
            writeln!(out, "#doc_count\t{n}")?;
        }
        writeln!(out, "#source\t{}", self.source_label)?;
        let mut terms: Vec<_> = self.weights.iter().collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        for (t, w) in terms {
            writeln!(out, "{t}\t{w}")?;
        }
        Ok(())
    }
}

/// Document-frequency table over the casefolded tokens of `docs`.
pub fn build_idf<'a>(docs: impl IntoIterator<Item = &'a TokenSeq>) -> Result<IdfTable, TextError> {
    IdfTable::from_documents(docs.into_iter().map(|d| d.folded.iter()), "corpus")
}
