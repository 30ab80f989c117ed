//! Feature-based spoiler-type classification: n-gram features, chi-square
//! selection, naive Bayes / logistic regression / linear SVM, and the
//! multiclass, one-vs-rest, and one-vs-one settings.

mod bundle;
mod eval;
mod features;
mod select;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::SpoilerType;
use crate::textproc::TextError;

pub use bundle::{train_classifier, ClassifierBundle, TrainingReport, BUNDLE_VERSION};
pub use eval::{accuracy, balanced_accuracy, confusion_matrix, summarize, ConfusionMatrix, EvalSummary, PredictionRecord};
pub use features::{
    build_feature_idf, extract_features, idf_terms, is_post_feature, FeatureConfig, FeatureSpace, FeatureVector,
};
pub use select::{chi2_select, chi2_statistic, FeatureMask};
pub use train::{
    default_grid, fit, hinge_loss_grad, logistic_loss_grad, train, ClassifierKind, Dataset, Hyperparams,
    LinearModel, LinearParams,
};

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no labels to evaluate")]
    EmptyInput,
    #[error("class {0:?} has no gold examples")]
    MissingClass(String),
    #[error("labels do not fit the setting: {0}")]
    LabelMismatch(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("naive Bayes needs non-negative features (column {0})")]
    NegativeFeature(usize),
    #[error("keep fraction {0} is outside (0, 1]")]
    InvalidKeepFraction(f64),
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which labels a model separates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// All three spoiler types.
    Multiclass,
    /// One type against the other two, labelled [`Setting::REST`].
    OneVsRest(SpoilerType),
    /// Two types; posts of the third are left out.
    OneVsOne(SpoilerType, SpoilerType),
}

impl Setting {
    pub const REST: &'static str = "rest";

    /// Class label of a post with gold type `t`, or `None` when the setting
    /// excludes it.
    pub fn label(&self, t: SpoilerType) -> Option<String> {
        match *self {
            Setting::Multiclass => Some(t.to_string()),
            Setting::OneVsRest(pos) => Some(if t == pos { t.to_string() } else { Self::REST.into() }),
            Setting::OneVsOne(a, b) => (t == a || t == b).then(|| t.to_string()),
        }
    }

    pub fn classes(&self) -> Vec<String> {
        match *self {
            Setting::Multiclass => SpoilerType::ALL.iter().map(ToString::to_string).collect(),
            Setting::OneVsRest(pos) => vec![pos.to_string(), Self::REST.into()],
            Setting::OneVsOne(a, b) => vec![a.to_string(), b.to_string()],
        }
    }

    /// Whether balanced accuracy (rather than plain accuracy) is the
    /// selection metric.
    pub fn prefers_balanced_accuracy(&self) -> bool {
        matches!(self, Setting::Multiclass)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Multiclass => f.write_str("multiclass"),
            Setting::OneVsRest(t) => write!(f, "ovr:{t}"),
            Setting::OneVsOne(a, b) => write!(f, "ovo:{a},{b}"),
        }
    }
}

impl FromStr for Setting {
    type Err = String;

    /// `multiclass`, `ovr:TYPE`, `ovo` (phrase vs. passage) or `ovo:A,B`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = s.split_once(':').map_or((s.as_str(), None), |(h, a)| (h, Some(a)));
        match (head, arg) {
            ("multiclass", None) => Ok(Setting::Multiclass),
            ("ovr" | "one-vs-rest", Some(t)) => Ok(Setting::OneVsRest(t.parse()?)),
            ("ovo" | "one-vs-one", None) => Ok(Setting::OneVsOne(SpoilerType::Phrase, SpoilerType::Passage)),
            ("ovo" | "one-vs-one", Some(pair)) => {
                let (a, b) = pair.split_once(',').ok_or("ovo needs two types, e.g. ovo:phrase,passage")?;
                let (a, b): (SpoilerType, SpoilerType) = (a.parse()?, b.parse()?);
                if a == b {
                    return Err("ovo needs two different types".into());
                }
                Ok(Setting::OneVsOne(a, b))
            }
            _ => Err(format!("unknown setting {s:?}")),
        }
    }
}

impl Serialize for Setting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Setting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
