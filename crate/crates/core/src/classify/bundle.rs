use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{accuracy, balanced_accuracy, summarize, EvalSummary, PredictionRecord};
use super::features::{build_feature_idf, extract_features, FeatureConfig, FeatureSpace, FeatureVector};
use super::select::chi2_select;
use super::train::{train, ClassifierKind, Hyperparams, LinearModel};
use super::{ClassifyError, Setting};
use crate::corpus::ClickbaitPost;
use crate::textproc::{IdfTable, PosTagger};

pub const BUNDLE_VERSION: u32 = 1;

/// Everything needed to classify new posts: feature settings, the idf
/// entries the model's features use, and the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierBundle {
    pub version: u32,
    pub feature_config: FeatureConfig,
    pub idf_doc_count: Option<usize>,
    pub idf: BTreeMap<String, f64>,
    pub model: LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub kind: ClassifierKind,
    pub setting: Setting,
    pub train_posts: usize,
    pub validation_posts: usize,
    pub features_seen: usize,
    pub features_kept: usize,
    /// Validation score of every grid point, in grid order.
    pub selection: Vec<(Hyperparams, f64)>,
    pub chosen: Hyperparams,
    pub train: EvalSummary,
    pub validation: Option<EvalSummary>,
}

/// Gram key (`kind/order/gram`) behind a feature id.
fn gram_key(feature: &str) -> Option<String> {
    let mut it = feature.splitn(5, '/');
    let (_, kind, order, _, gram) = (it.next()?, it.next()?, it.next()?, it.next()?, it.next()?);
    Some(format!("{kind}/{order}/{gram}"))
}

fn labelled<'a>(posts: &[&'a ClickbaitPost], setting: Setting) -> (Vec<&'a ClickbaitPost>, Vec<String>) {
    posts
        .iter()
        .filter_map(|p| setting.label(p.spoiler_type).map(|l| (*p, l)))
        .unzip()
}

fn featurize_all(
    posts: &[&ClickbaitPost],
    idf: &IdfTable,
    tagger: &dyn PosTagger,
    cfg: &FeatureConfig,
) -> Result<Vec<FeatureVector>, ClassifyError> {
    posts
        .par_iter()
        .map(|p| extract_features(p, idf, tagger, cfg).map_err(ClassifyError::from))
        .collect()
}

fn selection_score(setting: Setting, pred: &[String], gold: &[String]) -> Result<f64, ClassifyError> {
    if setting.prefers_balanced_accuracy() {
        balanced_accuracy(pred, gold).or_else(|_| accuracy(pred, gold))
    } else {
        accuracy(pred, gold)
    }
}

/// Extracts features, selects them on the training posts, trains one model
/// per grid point, and keeps the one scoring best on `validation` (the first
/// grid point when there are no validation posts). Posts the setting
/// excludes are skipped.
#[allow(clippy::too_many_arguments)]
pub fn train_classifier(
    train_posts: &[&ClickbaitPost],
    validation_posts: &[&ClickbaitPost],
    kind: ClassifierKind,
    setting: Setting,
    cfg: &FeatureConfig,
    tagger: &dyn PosTagger,
    grid: &[Hyperparams],
    seed: u64,
) -> Result<(ClassifierBundle, TrainingReport), ClassifyError> {
    let (train_posts, y) = labelled(train_posts, setting);
    let (valid_posts, vy) = labelled(validation_posts, setting);
    if train_posts.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let idf = build_feature_idf(&train_posts, tagger, cfg)?;
    let x = featurize_all(&train_posts, &idf, tagger, cfg)?;
    let features_seen = x.iter().flat_map(|v| v.0.keys()).collect::<BTreeSet<_>>().len();
    let mask = chi2_select(&x, &y, cfg.doc_keep_fraction)?;
    let space = FeatureSpace::new(mask.kept.iter().cloned());
    let vx = featurize_all(&valid_posts, &idf, tagger, cfg)?;

    let grid: Vec<Hyperparams> = if kind == ClassifierKind::NaiveBayes || grid.is_empty() {
        vec![grid.first().copied().unwrap_or_default()]
    } else {
        grid.to_vec()
    };
    let mut best: Option<(LinearModel, f64)> = None;
    let mut selection = Vec::with_capacity(grid.len());
    for hp in grid {
        let model = train(kind, setting, space.clone(), &x, &y, hp, seed)?;
        let score = if vx.is_empty() {
            0.0
        } else {
            let pred: Vec<String> = vx.iter().map(|v| model.predict(v).0).collect();
            selection_score(setting, &pred, &vy)?
        };
        log::debug!("{kind} {setting} {hp:?}: validation {score:.4}");
        selection.push((hp, score));
        if best.as_ref().map_or(true, |(_, s)| score > *s) {
            best = Some((model, score));
        }
    }
    let (model, _) = best.expect("grid is non-empty");

    let train_pred: Vec<String> = x.iter().map(|v| model.predict(v).0).collect();
    let validation = if vx.is_empty() {
        None
    } else {
        let pred: Vec<String> = vx.iter().map(|v| model.predict(v).0).collect();
        Some(summarize(&pred, &vy)?)
    };
    let report = TrainingReport {
        kind,
        setting,
        train_posts: train_posts.len(),
        validation_posts: valid_posts.len(),
        features_seen,
        features_kept: space.len(),
        selection,
        chosen: model.hyperparams,
        train: summarize(&train_pred, &y)?,
        validation,
    };
    let used: BTreeSet<String> = space.names().iter().filter_map(|f| gram_key(f)).collect();
    let bundle = ClassifierBundle {
        version: BUNDLE_VERSION,
        feature_config: cfg.clone(),
        idf_doc_count: idf.doc_count(),
        idf: idf.subset(used.iter().map(String::as_str)).iter().map(|(k, v)| (k.to_string(), v)).collect(),
        model,
    };
    Ok((bundle, report))
}

impl ClassifierBundle {
    pub fn idf_table(&self) -> IdfTable {
        IdfTable::from_entries(self.idf.clone(), self.idf_doc_count, "model")
    }

    pub fn featurize(&self, post: &ClickbaitPost, tagger: &dyn PosTagger) -> Result<FeatureVector, ClassifyError> {
        Ok(extract_features(post, &self.idf_table(), tagger, &self.feature_config)?)
    }

    pub fn classify(&self, post: &ClickbaitPost, tagger: &dyn PosTagger) -> Result<(String, f64), ClassifyError> {
        Ok(self.model.predict(&self.featurize(post, tagger)?))
    }

    /// Predicts every post the model's setting covers.
    pub fn evaluate(
        &self,
        posts: &[&ClickbaitPost],
        tagger: &dyn PosTagger,
    ) -> Result<(EvalSummary, Vec<PredictionRecord>), ClassifyError> {
        let (posts, gold) = labelled(posts, self.model.setting);
        if posts.is_empty() {
            return Err(ClassifyError::EmptyInput);
        }
        let idf = self.idf_table();
        let x = featurize_all(&posts, &idf, tagger, &self.feature_config)?;
        let records: Vec<PredictionRecord> = posts
            .iter()
            .zip(&x)
            .zip(&gold)
            .map(|((p, v), g)| {
                let (pred, score) = self.model.predict(v);
                PredictionRecord {
                    id: p.id.clone(),
                    gold: g.clone(),
                    pred,
                    score,
                }
            })
            .collect();
        let pred: Vec<String> = records.iter().map(|r| r.pred.clone()).collect();
        Ok((summarize(&pred, &gold)?, records))
    }

    pub fn write(&self, out: impl Write) -> Result<(), ClassifyError> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read(input: impl Read) -> Result<Self, ClassifyError> {
        let b: ClassifierBundle = serde_json::from_reader(input)?;
        if b.version != BUNDLE_VERSION {
            return Err(ClassifyError::UnsupportedVersion(b.version));
        }
        Ok(b)
    }
}
