//! Clickbait spoiling toolkit: corpus handling, spoiler-type classification,
//! passage retrieval, spoiler metrics with calibrated confidence thresholds,
//! an external-generator bridge, and an end-to-end evaluation pipeline.

pub mod bridge;
pub mod calibration;
pub mod classify;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod retrieval;
pub mod textproc;

pub use calibration::{Metric, ModelFamily, ThresholdSet};
pub use classify::{ClassifierBundle, ClassifierKind, Setting};
pub use corpus::{ClickbaitPost, Corpus, Span, SpoilerType, Split};
pub use metrics::{EvalReport, SpoilerPrediction};
pub use pipeline::{Mode, PipelineConfig};
pub use retrieval::{RetrievalConfig, ScoredPassage};
