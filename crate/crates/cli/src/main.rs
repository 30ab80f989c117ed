mod commands;
mod generators;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clickspoil::bridge::{BridgeError, Task};
use clickspoil::calibration::{ModelFamily, Plateau};
use clickspoil::metrics::P1Mode;
use clickspoil::pipeline::{Mode, PipelineError};
use clickspoil::retrieval::Model;
use clickspoil::{ClassifierKind, Setting, SpoilerType, Split};

/// Clickbait spoiling experiments: spoiler-type classification, passage
/// retrieval, external generators, scoring, and threshold calibration.
///
/// Output is one JSON record per line unless --pretty is given.
#[derive(Debug, Parser)]
#[command(name = "clickspoil", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every randomized step; recorded in reports.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-post stages (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Render tables instead of JSON records.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Corpus file or directory with train/validation/test .jsonl files.
    #[arg(long, global = true, env = "CLICKBAIT_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Field mapping: `webis`, `canonical`, or a mapping file.
    #[arg(long, global = true, default_value = "webis")]
    pub mapping: String,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Check every corpus record against the record invariants.
    Validate {
        /// Also write one JSON line per violation here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Post counts per spoiler type and split.
    SplitStats,
    /// Spoiler-type classifiers.
    #[command(subcommand)]
    Clf(ClfCmd),
    /// Rank paragraphs of each post and write a run file.
    Retrieve {
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[command(flatten)]
        posts: PostArgs,
        /// Keep only the top N paragraphs per post.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Grid search of BM25 k1 and b for Precision@1 on training posts.
    TuneBm25 {
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[arg(long, default_value = "train")]
        split: Split,
        #[arg(long, value_delimiter = ',', default_value = "phrase,passage")]
        types: Vec<SpoilerType>,
    },
    /// Ask an external generator for spoilers and write predictions.
    Spoil {
        /// Generator command line (program and arguments, split on whitespace).
        #[arg(long)]
        generator: String,
        /// Task sent with every request; by default each post's gold type.
        #[arg(long)]
        task: Option<Task>,
        #[arg(long, default_value = "qa")]
        family: ModelFamily,
        /// Seconds to wait for each response.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value_t = 120.0)]
        handshake_timeout: f64,
        #[command(flatten)]
        posts: PostArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Score predictions (or a run file) against the gold spoilers.
    Score {
        /// Prediction records or a run file.
        #[arg(long)]
        predictions: PathBuf,
        /// How Precision@1 credits a prediction; inferred per prediction by default.
        #[arg(long)]
        p1_mode: Option<P1Mode>,
        /// Family assumed for predictions that do not name one.
        #[arg(long, default_value = "qa")]
        family: ModelFamily,
        /// Threshold file; the bundled thresholds by default.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Externally computed BERTScore values, lines of {"post_id", "score"}.
        #[arg(long)]
        bertscore: Option<PathBuf>,
        #[arg(long)]
        include_multipart: bool,
        #[arg(long)]
        label: Option<String>,
    },
    /// Threshold tables and picks from human judgments.
    Calibrate {
        #[arg(long)]
        judgments: PathBuf,
        /// Largest tolerated number of false positives.
        #[arg(long, default_value_t = 1)]
        fp_budget: usize,
        #[arg(long, default_value = "lowest", value_parser = parse_plateau)]
        plateau: Plateau,
        /// Family for judgments that do not name one.
        #[arg(long, default_value = "qa")]
        family: ModelFamily,
        /// Write the selected thresholds here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Route posts to typed generators and evaluate the whole pipeline.
    #[command(after_help = generators::HELP)]
    E2e {
        #[arg(long)]
        mode: Option<Mode>,
        /// Experiment file; flags override its settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Phrase-vs-passage model for `--mode classifier`.
        #[arg(long)]
        classifier: Option<PathBuf>,
        /// Generator for phrase posts (see GENERATORS below).
        #[arg(long)]
        phrase_generator: Option<String>,
        #[arg(long)]
        passage_generator: Option<String>,
        #[arg(long)]
        agnostic_generator: Option<String>,
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Let multipart posts through in `--mode none`.
        #[arg(long)]
        include_multipart: bool,
        #[arg(long)]
        label: Option<String>,
        /// Seconds to wait for each external generator response.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ClfCmd {
    /// Train on the train split, select hyperparameters on validation.
    Train {
        #[arg(long, default_value = "lr")]
        kind: ClassifierKind,
        /// multiclass, ovr:TYPE, ovo, or ovo:A,B
        #[arg(long, default_value = "ovo")]
        setting: Setting,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        post_weight: Option<f64>,
        #[arg(long)]
        keep_fraction: Option<f64>,
        #[arg(long)]
        no_pos: bool,
        #[arg(long)]
        l2_normalize: bool,
        #[arg(long)]
        epochs: Option<usize>,
        /// Skip the hyperparameter grid and use the defaults.
        #[arg(long)]
        no_grid: bool,
    },
    /// Evaluate a trained model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Write one record per post here.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RetrievalArgs {
    #[arg(long, default_value = "bm25")]
    pub model: Model,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Expand queries with RM3 feedback.
    #[arg(long)]
    pub rm3: bool,
    #[arg(long)]
    pub fb_docs: Option<usize>,
    #[arg(long)]
    pub fb_terms: Option<usize>,
    #[arg(long)]
    pub orig_weight: Option<f64>,
    /// Rank the title as paragraph -1 too.
    #[arg(long)]
    pub title: bool,
    #[arg(long)]
    pub stem: bool,
    /// Stopword file, one word per line.
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PostArgs {
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long, value_delimiter = ',', default_value = "phrase,passage")]
    pub types: Vec<SpoilerType>,
}

fn parse_plateau(s: &str) -> Result<Plateau, String> {
    match s {
        "lowest" => Ok(Plateau::Lowest),
        "highest" => Ok(Plateau::Highest),
        other => Err(format!("expected lowest or highest, got {other:?}")),
    }
}

const DATA_FAILURE: u8 = 1;
const USAGE: u8 = 2;
const GENERATOR_FAILURE: u8 = 3;

/// Usage problems found after argument parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if cause.is::<BridgeError>() || matches!(cause.downcast_ref(), Some(PipelineError::GeneratorUnavailable(_))) {
            return GENERATOR_FAILURE;
        }
    }
    DATA_FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.global.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(USAGE);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            if code == USAGE {
                eprintln!("\nUsage: clickspoil [OPTIONS] <COMMAND>\nFor more information, try '--help'.");
            }
            ExitCode::from(code)
        }
    }
}
