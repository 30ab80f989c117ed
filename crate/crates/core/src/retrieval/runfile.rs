use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{RetrievalError, ScoredPassage};

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub post_id: String,
    pub rank: usize,
    pub paragraph_index: i32,
    pub score: f64,
    pub model_tag: String,
}

/// Writes rankings as run-file lines. `depth` limits the ranks written per post.
pub fn write_run<'a>(
    rankings: impl IntoIterator<Item = (&'a str, &'a [ScoredPassage])>,
    model_tag: &str,
    depth: Option<usize>,
    mut out: impl Write,
) -> std::io::Result<()> {
    for (post_id, ranking) in rankings {
        let n = depth.unwrap_or(ranking.len()).min(ranking.len());
        for p in &ranking[..n] {
            let rec = RunRecord {
                post_id: post_id.to_string(),
                rank: p.rank,
                paragraph_index: p.paragraph_index,
                score: p.score,
                model_tag: model_tag.to_string(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec).expect("serializable"))?;
        }
    }
    Ok(())
}

/// Groups run lines by post (in first-appearance order), each ranking sorted
/// by rank.
pub fn read_run(input: impl BufRead) -> Result<Vec<(String, Vec<ScoredPassage>)>, RetrievalError> {
    let mut out: Vec<(String, Vec<ScoredPassage>)> = Vec::new();
    let mut pos = std::collections::HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| RetrievalError::MalformedRun { line: i + 1, reason };
        let r: RunRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if r.rank == 0 {
            return Err(bad("ranks start at 1".into()));
        }
        let slot = *pos.entry(r.post_id.clone()).or_insert_with(|| {
            out.push((r.post_id.clone(), Vec::new()));
            out.len() - 1
        });
        out[slot].1.push(ScoredPassage {
            paragraph_index: r.paragraph_index,
            score: r.score,
            rank: r.rank,
        });
    }
    for (id, ranking) in &mut out {
        ranking.sort_by_key(|p| p.rank);
        if ranking.windows(2).any(|w| w[0].rank == w[1].rank) {
            return Err(RetrievalError::MalformedRun {
                line: 0,
                reason: format!("duplicate rank for post {id}"),
            });
        }
    }
    Ok(out)
}
