//! End-to-end runs: route each post to a typed (or type-agnostic) spoiler
//! generator, collect predictions with a worker pool, and evaluate.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bridge::{spawn_generator, BridgeError, GeneratorHandle, GeneratorRequest, Task};
use crate::calibration::{ModelFamily, ThresholdSet};
use crate::classify::{ClassifierBundle, Setting};
use crate::corpus::{ClickbaitPost, Corpus, SpoilerType};
use crate::metrics::{evaluate_run, EvalOptions, EvalReport, MetricError, SpoilerPrediction};
use crate::retrieval::{retrieve_spoiler, Bm25Params, Model, RetrievalConfig, Rm3Params, DEFAULT_MU};
use crate::textproc::{LexiconTagger, PosTagger};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error("post {0} cannot be routed (multipart)")]
    UnroutablePost(String),
    #[error("generator unavailable: {0}")]
    GeneratorUnavailable(String),
    #[error("classifier failed on post {post}: {reason}")]
    Classifier { post: String, reason: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("config file: {0}")]
    ConfigFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Gold spoiler types pick the generator.
    #[default]
    Oracle,
    /// A trained phrase-vs-passage classifier picks the generator.
    Classifier,
    /// One type-agnostic generator handles every post.
    None,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Classifier => "classifier",
            Mode::None => "none",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "oracle" => Ok(Mode::Oracle),
            "classifier" => Ok(Mode::Classifier),
            "none" => Ok(Mode::None),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

/// Why a generator produced no prediction for one post.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorFailure {
    /// The generator cannot run at all; the whole run stops.
    Unavailable(String),
    /// This post failed; it is recorded as an abstention.
    Failed(String),
}

pub trait SpoilerGenerator: Send {
    fn tag(&self) -> String;
    fn generate(&mut self, post: &ClickbaitPost, task: Task) -> Result<SpoilerPrediction, GeneratorFailure>;
}

/// Builds one generator instance per worker.
pub trait GeneratorFactory: Send + Sync {
    fn tag(&self) -> String;
    fn instantiate(&self) -> Result<Box<dyn SpoilerGenerator>, GeneratorFailure>;
}

impl<F> GeneratorFactory for (String, F)
where
    F: Fn() -> Box<dyn SpoilerGenerator> + Send + Sync,
{
    fn tag(&self) -> String {
        self.0.clone()
    }

    fn instantiate(&self) -> Result<Box<dyn SpoilerGenerator>, GeneratorFailure> {
        Ok((self.1)())
    }
}

struct RetrievalGenerator(RetrievalConfig);

impl SpoilerGenerator for RetrievalGenerator {
    fn tag(&self) -> String {
        self.0.model_tag()
    }

    fn generate(&mut self, post: &ClickbaitPost, _task: Task) -> Result<SpoilerPrediction, GeneratorFailure> {
        retrieve_spoiler(post, &self.0).map_err(|e| GeneratorFailure::Failed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSpec {
    pub command: Vec<String>,
    pub env: Vec<(String, String)>,
    pub family: ModelFamily,
    pub timeout: Duration,
    pub handshake_timeout: Duration,
}

impl ExternalSpec {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            env: Vec::new(),
            family: ModelFamily::Qa,
            timeout: Duration::from_secs(60),
            handshake_timeout: Duration::from_secs(120),
        }
    }

    fn spawn(&self) -> Result<GeneratorHandle, BridgeError> {
        spawn_generator(&self.command, &self.env, self.handshake_timeout)
    }
}

struct ExternalGenerator {
    spec: ExternalSpec,
    handle: Option<GeneratorHandle>,
}

impl SpoilerGenerator for ExternalGenerator {
    fn tag(&self) -> String {
        self.spec.command.join(" ")
    }

    fn generate(&mut self, post: &ClickbaitPost, task: Task) -> Result<SpoilerPrediction, GeneratorFailure> {
        if self.handle.as_ref().map_or(true, GeneratorHandle::is_poisoned) {
            // a crashed process only costs its own requests; start a fresh one
            self.handle = Some(self.spec.spawn().map_err(|e| GeneratorFailure::Failed(e.to_string()))?);
        }
        let handle = self.handle.as_mut().expect("spawned above");
        let resp = handle
            .request_spoiler(GeneratorRequest::for_post(post, task), self.spec.timeout)
            .map_err(|e| GeneratorFailure::Failed(e.to_string()))?;
        Ok(resp.into_prediction(&post.id, self.spec.family))
    }
}

/// A generator source: built-in retrieval, an external process, or any
/// caller-supplied factory.
#[derive(Clone)]
pub enum GeneratorSpec {
    Retrieval(RetrievalConfig),
    External(ExternalSpec),
    Custom(Arc<dyn GeneratorFactory>),
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl GeneratorSpec {
    pub fn tag(&self) -> String {
        match self {
            GeneratorSpec::Retrieval(c) => c.model_tag(),
            GeneratorSpec::External(s) => s.command.join(" "),
            GeneratorSpec::Custom(f) => f.tag(),
        }
    }

    pub fn instantiate(&self) -> Result<Box<dyn SpoilerGenerator>, GeneratorFailure> {
        match self {
            GeneratorSpec::Retrieval(c) => Ok(Box::new(RetrievalGenerator(c.clone()))),
            GeneratorSpec::External(s) => {
                let handle = s.spawn().map_err(|e| GeneratorFailure::Unavailable(e.to_string()))?;
                Ok(Box::new(ExternalGenerator {
                    spec: s.clone(),
                    handle: Some(handle),
                }))
            }
            GeneratorSpec::Custom(f) => f.instantiate(),
        }
    }
}

#[derive(Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub phrase_generator: Option<GeneratorSpec>,
    pub passage_generator: Option<GeneratorSpec>,
    pub agnostic_generator: Option<GeneratorSpec>,
    pub classifier: Option<Arc<ClassifierBundle>>,
    pub tagger: Arc<dyn PosTagger>,
    pub thresholds: ThresholdSet,
    pub seed: u64,
    pub workers: usize,
    /// Let multipart posts through in `none` mode.
    pub include_multipart: bool,
}

impl fmt::Debug for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PipelineConfig")
            .field("mode", &self.mode)
            .field("phrase_generator", &self.phrase_generator)
            .field("passage_generator", &self.passage_generator)
            .field("agnostic_generator", &self.agnostic_generator)
            .field("classifier", &self.classifier.is_some())
            .field("seed", &self.seed)
            .field("workers", &self.workers)
            .finish()
    }
}

impl PipelineConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            phrase_generator: None,
            passage_generator: None,
            agnostic_generator: None,
            classifier: None,
            tagger: Arc::new(LexiconTagger::bundled()),
            thresholds: ThresholdSet::published(),
            seed: 0,
            workers: 1,
            include_multipart: false,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.into()));
        match self.mode {
            Mode::None if self.agnostic_generator.is_none() => return bad("mode none needs an agnostic generator"),
            Mode::Oracle | Mode::Classifier if self.phrase_generator.is_none() || self.passage_generator.is_none() => {
                return bad("typed modes need phrase and passage generators")
            }
            _ => {}
        }
        if self.mode == Mode::Classifier {
            let Some(c) = &self.classifier else {
                return bad("mode classifier needs a classifier model");
            };
            if c.model.setting != Setting::OneVsOne(SpoilerType::Phrase, SpoilerType::Passage)
                && c.model.setting != Setting::OneVsOne(SpoilerType::Passage, SpoilerType::Phrase)
            {
                return bad("the routing classifier must be a phrase-vs-passage one-vs-one model");
            }
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    fn generator_for(&self, route: Route) -> &GeneratorSpec {
        let spec = match route {
            Route::Typed(SpoilerType::Phrase) => &self.phrase_generator,
            Route::Typed(_) => &self.passage_generator,
            Route::Agnostic => &self.agnostic_generator,
        };
        spec.as_ref().expect("validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Route {
    Typed(SpoilerType),
    Agnostic,
}

impl Route {
    pub fn task(self) -> Task {
        match self {
            Route::Typed(t) => t.into(),
            Route::Agnostic => Task::Agnostic,
        }
    }
}

/// Picks the generator route for `post`.
pub fn route(post: &ClickbaitPost, cfg: &PipelineConfig) -> Result<Route, PipelineError> {
    if post.spoiler_type == SpoilerType::Multipart && !(cfg.mode == Mode::None && cfg.include_multipart) {
        return Err(PipelineError::UnroutablePost(post.id.clone()));
    }
    match cfg.mode {
        Mode::Oracle => Ok(Route::Typed(post.spoiler_type)),
        Mode::None => Ok(Route::Agnostic),
        Mode::Classifier => {
            let c = cfg
                .classifier
                .as_ref()
                .ok_or_else(|| PipelineError::InvalidConfig("no classifier".into()))?;
            let (label, _) = c.classify(post, cfg.tagger.as_ref()).map_err(|e| PipelineError::Classifier {
                post: post.id.clone(),
                reason: e.to_string(),
            })?;
            let t: SpoilerType = label.parse().map_err(|reason| PipelineError::Classifier {
                post: post.id.clone(),
                reason,
            })?;
            Ok(Route::Typed(t))
        }
    }
}

struct Outcome {
    route: Route,
    prediction: SpoilerPrediction,
    failure: Option<String>,
}

/// Runs every post through its routed generator and evaluates the result.
///
/// Multipart posts are left out (and counted) unless `none` mode with
/// `include_multipart`. Each worker owns its generator instances; the report
/// is ordered by post id, so runs with deterministic generators are
/// reproducible regardless of worker count.
pub fn run_end_to_end(posts: &[&ClickbaitPost], cfg: &PipelineConfig) -> Result<EvalReport, PipelineError> {
    cfg.validate()?;
    let allow_multipart = cfg.mode == Mode::None && cfg.include_multipart;
    let (kept, excluded): (Vec<&ClickbaitPost>, Vec<&ClickbaitPost>) = posts
        .iter()
        .partition(|p| allow_multipart || p.spoiler_type != SpoilerType::Multipart);
    let routes = kept.iter().map(|p| route(p, cfg)).collect::<Result<Vec<_>, _>>()?;

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..kept.len()).map(|_| None).collect());
    let fatal: Mutex<Option<String>> = Mutex::new(None);
    let workers = cfg.workers.min(kept.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                let mut gens: BTreeMap<Route, Box<dyn SpoilerGenerator>> = BTreeMap::new();
                loop {
                    if fatal.lock().expect("lock").is_some() {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= kept.len() {
                        return;
                    }
                    let (post, r) = (kept[i], routes[i]);
                    if !gens.contains_key(&r) {
                        match cfg.generator_for(r).instantiate() {
                            Ok(g) => {
                                gens.insert(r, g);
                            }
                            Err(GeneratorFailure::Unavailable(m) | GeneratorFailure::Failed(m)) => {
                                *fatal.lock().expect("lock") = Some(m);
                                return;
                            }
                        }
                    }
                    let g = gens.get_mut(&r).expect("inserted");
                    let outcome = match g.generate(post, r.task()) {
                        Ok(mut p) => {
                            p.post_id = post.id.clone();
                            Outcome {
                                route: r,
                                prediction: p,
                                failure: None,
                            }
                        }
                        Err(GeneratorFailure::Unavailable(m)) => {
                            *fatal.lock().expect("lock") = Some(m);
                            return;
                        }
                        Err(GeneratorFailure::Failed(m)) => {
                            log::warn!("post {}: {m}", post.id);
                            Outcome {
                                route: r,
                                prediction: SpoilerPrediction::abstain(post.id.clone()),
                                failure: Some(m),
                            }
                        }
                    };
                    results.lock().expect("lock")[i] = Some(outcome);
                }
            });
        }
    });
    if let Some(m) = fatal.into_inner().expect("lock") {
        return Err(PipelineError::GeneratorUnavailable(m));
    }
    let outcomes: Vec<Outcome> = results
        .into_inner()
        .expect("lock")
        .into_iter()
        .map(|o| o.expect("every post processed"))
        .collect();

    let mut report = if outcomes.is_empty() {
        EvalReport::default()
    } else {
        let corpus = Corpus {
            posts: kept.iter().map(|p| (*p).clone()).collect(),
            schema_version: String::new(),
        };
        let preds: Vec<SpoilerPrediction> = outcomes.iter().map(|o| o.prediction.clone()).collect();
        evaluate_run(
            &preds,
            &corpus,
            &cfg.thresholds,
            EvalOptions {
                include_multipart: allow_multipart,
                ..EvalOptions::default()
            },
        )?
    };
    let by_id: BTreeMap<&str, &Outcome> = outcomes.iter().map(|o| (o.prediction.post_id.as_str(), o)).collect();
    let mut agree = 0usize;
    for row in &mut report.rows {
        let o = by_id[row.post_id.as_str()];
        if let Route::Typed(t) = o.route {
            row.routed_type = Some(t);
            agree += usize::from(t == row.gold_type);
        }
        row.note.clone_from(&o.failure);
    }
    report.meta.mode = Some(cfg.mode.to_string());
    report.meta.seed = Some(cfg.seed);
    report.meta.excluded_multipart += excluded.len();
    report.meta.generator_failures = outcomes.iter().filter(|o| o.failure.is_some()).count();
    report.meta.generators = match cfg.mode {
        Mode::None => vec![format!("agnostic={}", cfg.generator_for(Route::Agnostic).tag())],
        _ => vec![
            format!("phrase={}", cfg.generator_for(Route::Typed(SpoilerType::Phrase)).tag()),
            format!("passage={}", cfg.generator_for(Route::Typed(SpoilerType::Passage)).tag()),
        ],
    };
    if cfg.mode != Mode::None && !report.rows.is_empty() {
        report.meta.routing_accuracy = Some(100.0 * agree as f64 / report.rows.len() as f64);
    }
    Ok(report)
}

/// Declarative experiment file (TOML).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFile {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub include_multipart: bool,
    /// Threshold file; the bundled defaults when absent.
    pub thresholds: Option<PathBuf>,
    pub classifier_model: Option<PathBuf>,
    pub phrase_generator: Option<GeneratorFile>,
    pub passage_generator: Option<GeneratorFile>,
    pub agnostic_generator: Option<GeneratorFile>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorFile {
    Retrieval {
        #[serde(default)]
        model: Model,
        k1: Option<f64>,
        b: Option<f64>,
        mu: Option<f64>,
        #[serde(default)]
        rm3: bool,
        fb_docs: Option<usize>,
        fb_terms: Option<usize>,
        orig_weight: Option<f64>,
        #[serde(default)]
        include_title: bool,
        #[serde(default)]
        stem: bool,
    },
    External {
        command: Vec<String>,
        #[serde(default)]
        env: BTreeMap<String, String>,
        #[serde(default)]
        family: ModelFamily,
        timeout_secs: Option<f64>,
        handshake_secs: Option<f64>,
    },
}

impl GeneratorFile {
    pub fn to_spec(&self) -> Result<GeneratorSpec, PipelineError> {
        let secs = |v: Option<f64>, d: f64| -> Result<Duration, PipelineError> {
            Duration::try_from_secs_f64(v.unwrap_or(d)).map_err(|e| PipelineError::ConfigFile(e.to_string()))
        };
        Ok(match self {
            GeneratorFile::Retrieval {
                model,
                k1,
                b,
                mu,
                rm3,
                fb_docs,
                fb_terms,
                orig_weight,
                include_title,
                stem,
            } => {
                let d = Bm25Params::default();
                let r = Rm3Params::default();
                let mut cfg = RetrievalConfig {
                    model: *model,
                    bm25: Bm25Params {
                        k1: k1.unwrap_or(d.k1),
                        b: b.unwrap_or(d.b),
                    },
                    mu: mu.unwrap_or(DEFAULT_MU),
                    rm3: rm3.then(|| Rm3Params {
                        fb_docs: fb_docs.unwrap_or(r.fb_docs),
                        fb_terms: fb_terms.unwrap_or(r.fb_terms),
                        orig_weight: orig_weight.unwrap_or(r.orig_weight),
                    }),
                    include_title: *include_title,
                    ..RetrievalConfig::default()
                };
                cfg.analyzer.stem = *stem;
                GeneratorSpec::Retrieval(cfg)
            }
            GeneratorFile::External {
                command,
                env,
                family,
                timeout_secs,
                handshake_secs,
            } => {
                if command.is_empty() {
                    return Err(PipelineError::ConfigFile("external generator needs a command".into()));
                }
                GeneratorSpec::External(ExternalSpec {
                    command: command.clone(),
                    env: env.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                    family: *family,
                    timeout: secs(*timeout_secs, 60.0)?,
                    handshake_timeout: secs(*handshake_secs, 120.0)?,
                })
            }
        })
    }
}

impl PipelineFile {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::ConfigFile(e.to_string()))
    }

    /// Resolves file references relative to `base`, loads them, and checks
    /// the result.
    pub fn into_config(self, base: &Path) -> Result<PipelineConfig, PipelineError> {
        let cfg = self.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Like [`PipelineFile::into_config`] but leaves validation to the
    /// caller, who may still fill in generators.
    pub fn resolve(self, base: &Path) -> Result<PipelineConfig, PipelineError> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut cfg = PipelineConfig::new(self.mode);
        cfg.seed = self.seed;
        cfg.workers = self.workers;
        cfg.include_multipart = self.include_multipart;
        if let Some(p) = &self.thresholds {
            let path = resolve(p);
            let file = std::fs::File::open(&path)
                .map_err(|e| PipelineError::ConfigFile(format!("{}: {e}", path.display())))?;
            cfg.thresholds = ThresholdSet::read(std::io::BufReader::new(file))
                .map_err(|e| PipelineError::ConfigFile(format!("{}: {e}", path.display())))?;
        }
        if let Some(p) = &self.classifier_model {
            let path = resolve(p);
            let file = std::fs::File::open(&path)
                .map_err(|e| PipelineError::ConfigFile(format!("{}: {e}", path.display())))?;
            let bundle = ClassifierBundle::read(std::io::BufReader::new(file))
                .map_err(|e| PipelineError::ConfigFile(format!("{}: {e}", path.display())))?;
            cfg.classifier = Some(Arc::new(bundle));
        }
        cfg.phrase_generator = self.phrase_generator.as_ref().map(GeneratorFile::to_spec).transpose()?;
        cfg.passage_generator = self.passage_generator.as_ref().map(GeneratorFile::to_spec).transpose()?;
        cfg.agnostic_generator = self.agnostic_generator.as_ref().map(GeneratorFile::to_spec).transpose()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::ConfigFile(format!("{}: {e}", path.display())))?;
        Self::parse(&text)?.into_config(path.parent().unwrap_or(Path::new(".")))
    }
}
