use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{index_paragraphs, rank_indexed, Bm25Params, Query, RetrievalConfig, RetrievalError};
use crate::corpus::{gold_paragraphs, ClickbaitPost};

/// k1 in 0.1..=0.4 and b in 0.1..=1.0, both in steps of 0.1, k1-major.
pub fn bm25_grid() -> Vec<Bm25Params> {
    (1..=4)
        .flat_map(|k| {
            (1..=10).map(move |b| Bm25Params {
                k1: k as f64 / 10.0,
                b: b as f64 / 10.0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: Bm25Params,
    /// Mean Precision@1 of `best` on the training posts.
    pub objective: f64,
    /// Every evaluated candidate with its rank-1 hit count.
    pub evaluated: Vec<(Bm25Params, usize)>,
    pub posts: usize,
}

/// Exhaustive search maximizing mean Precision@1. Ties go to the smaller
/// (k1, b). Other fields of `base` (RM3, analyzer, title) are kept.
pub fn grid_search_bm25(
    train: &[&ClickbaitPost],
    grid: &[Bm25Params],
    base: &RetrievalConfig,
) -> Result<GridSearchResult, RetrievalError> {
    if train.is_empty() {
        return Err(RetrievalError::EmptyTrainingSet);
    }
    let prepared = train
        .par_iter()
        .filter(|p| !p.paragraphs.is_empty())
        .map(|p| {
            let idx = index_paragraphs(p, &base.analyzer, base.include_title)?;
            let query = Query::from_terms(&base.analyzer.terms(&p.post_text));
            Ok((idx, query, gold_paragraphs(p)))
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;

    let evaluated = grid
        .par_iter()
        .map(|&params| {
            let cfg = RetrievalConfig {
                bm25: params,
                ..base.clone()
            };
            let mut hits = 0;
            for (idx, query, gold) in &prepared {
                let ranking = rank_indexed(idx, query, &cfg)?;
                if gold.contains(&ranking[0].paragraph_index) {
                    hits += 1;
                }
            }
            Ok((params, hits))
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;

    let mut best: Option<(Bm25Params, usize)> = None;
    for &(params, hits) in &evaluated {
        let better = match best {
            None => true,
            Some((bp, bh)) => {
                hits > bh || (hits == bh && (params.k1, params.b) < (bp.k1, bp.b))
            }
        };
        if better {
            best = Some((params, hits));
        }
    }
    let (best, hits) = best.unwrap_or((base.bm25, 0));
    Ok(GridSearchResult {
        best,
        objective: hits as f64 / train.len() as f64,
        evaluated,
        posts: train.len(),
    })
}
