use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use clickspoil::calibration::{
    qa_grid, read_judgments, retrieval_grid, select_threshold, sweep, JudgedSample, ModelFamily, SelectionPolicy,
    ThresholdSet,
};
use clickspoil::classify::{default_grid, train_classifier, FeatureConfig, Hyperparams};
use clickspoil::corpus::{load_corpus, load_corpus_report, FieldMapping};
use clickspoil::metrics::{
    evaluate_run, predictions_from_run, read_predictions, write_predictions, EvalOptions, EvalReport,
};
use clickspoil::pipeline::{
    run_end_to_end, ExternalSpec, GeneratorFailure, GeneratorSpec, PipelineConfig, PipelineError, PipelineFile,
};
use clickspoil::retrieval::{
    bm25_grid, grid_search_bm25, rank_post, read_run, write_run, Analyzer, Bm25Params, RetrievalConfig, Rm3Params,
    DEFAULT_MU,
};
use clickspoil::textproc::LexiconTagger;
use clickspoil::{ClassifierBundle, ClickbaitPost, Corpus, SpoilerPrediction, SpoilerType, Split};

use crate::generators::{self, GeneratorArg};
use crate::{Cli, ClfCmd, Cmd, Global, PostArgs, RetrievalArgs, UsageError};

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Validate { report } => validate(g, report.as_deref()),
        Cmd::SplitStats => split_stats(g),
        Cmd::Clf(ClfCmd::Train {
            kind,
            setting,
            out,
            post_weight,
            keep_fraction,
            no_pos,
            l2_normalize,
            epochs,
            no_grid,
        }) => {
            let corpus = load(g)?;
            let mut fc = FeatureConfig::default();
            if let Some(w) = post_weight {
                fc.post_weight = *w;
            }
            if let Some(k) = keep_fraction {
                fc.doc_keep_fraction = *k;
            }
            fc.use_pos = !no_pos;
            fc.l2_normalize = *l2_normalize;
            let mut grid = if *no_grid { vec![Hyperparams::default()] } else { default_grid() };
            if let Some(e) = epochs {
                grid.iter_mut().for_each(|h| h.epochs = *e);
            }
            let train = posts_of(&corpus, Split::Train, &SpoilerType::ALL);
            let valid = posts_of(&corpus, Split::Validation, &SpoilerType::ALL);
            let tagger = LexiconTagger::bundled();
            let (bundle, report) =
                train_classifier(&train, &valid, *kind, *setting, &fc, &tagger, &grid, g.seed).context("training")?;
            let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
            bundle.write(&mut w)?;
            w.flush()?;
            let mut stdout = io::stdout().lock();
            if g.pretty {
                writeln!(stdout, "{} {}: {} training posts, {} validation posts", kind, setting, report.train_posts, report.validation_posts)?;
                writeln!(stdout, "features: {} seen, {} kept", report.features_seen, report.features_kept)?;
                for (hp, score) in &report.selection {
                    writeln!(stdout, "  l2={:<5} lr={:<5} validation {:.4}", hp.l2, hp.lr, score)?;
                }
                writeln!(stdout, "train accuracy {:.4}", report.train.accuracy)?;
                if let Some(v) = &report.validation {
                    writeln!(stdout, "validation accuracy {:.4}", v.accuracy)?;
                }
            } else {
                writeln!(stdout, "{}", serde_json::to_string(&report)?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Clf(ClfCmd::Eval {
            model,
            split,
            predictions,
        }) => {
            let corpus = load(g)?;
            let bundle = ClassifierBundle::read(BufReader::new(open(model)?))
                .with_context(|| format!("reading model {}", model.display()))?;
            let posts = posts_of(&corpus, *split, &SpoilerType::ALL);
            let (summary, records) = bundle.evaluate(&posts, &LexiconTagger::bundled())?;
            if let Some(p) = predictions {
                let mut w = create(p)?;
                for r in &records {
                    writeln!(w, "{}", serde_json::to_string(r)?)?;
                }
                w.flush()?;
            }
            let mut stdout = io::stdout().lock();
            if g.pretty {
                writeln!(stdout, "{} {} on {} posts", bundle.model.kind, bundle.model.setting, summary.posts)?;
                writeln!(stdout, "accuracy {:.2}", 100.0 * summary.accuracy)?;
                if let Some(b) = summary.balanced_accuracy {
                    writeln!(stdout, "balanced accuracy {:.2}", 100.0 * b)?;
                }
                for (gold, row) in &summary.confusion {
                    let cells: Vec<String> = row.iter().map(|(p, n)| format!("{p}={n}")).collect();
                    writeln!(stdout, "  gold {gold}: {}", cells.join(" "))?;
                }
            } else {
                let rec = json!({"model": bundle.model.kind, "setting": bundle.model.setting, "split": split, "summary": summary});
                writeln!(stdout, "{rec}")?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Retrieve {
            retrieval,
            posts,
            depth,
            out,
        } => {
            let corpus = load(g)?;
            let cfg = retrieval_config(retrieval)?;
            let selected = select(&corpus, posts);
            let rankings = selected
                .par_iter()
                .map(|p| rank_post(p, &cfg).with_context(|| format!("post {}", p.id)))
                .collect::<Result<Vec<_>>>()?;
            let mut w = sink(out.as_deref())?;
            write_run(
                selected.iter().zip(&rankings).map(|(p, r)| (p.id.as_str(), r.as_slice())),
                &cfg.model_tag(),
                *depth,
                &mut w,
            )?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::TuneBm25 {
            retrieval,
            split,
            types,
        } => {
            let corpus = load(g)?;
            let base = retrieval_config(retrieval)?;
            let train = posts_of(&corpus, *split, types);
            let result = grid_search_bm25(&train, &bm25_grid(), &base)?;
            let mut stdout = io::stdout().lock();
            if g.pretty {
                writeln!(
                    stdout,
                    "best k1={} b={}: Precision@1 {:.2} on {} posts",
                    result.best.k1,
                    result.best.b,
                    100.0 * result.objective,
                    result.posts
                )?;
                for (p, hits) in &result.evaluated {
                    writeln!(stdout, "  k1={:.1} b={:.1} hits={hits}", p.k1, p.b)?;
                }
            } else {
                writeln!(stdout, "{}", serde_json::to_string(&result)?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Spoil {
            generator,
            task,
            family,
            timeout,
            handshake_timeout,
            posts,
            out,
        } => {
            let corpus = load(g)?;
            let command: Vec<String> = generator.split_whitespace().map(String::from).collect();
            if command.is_empty() {
                return Err(UsageError("--generator is empty".into()).into());
            }
            let spec = GeneratorSpec::External(ExternalSpec {
                command,
                env: Vec::new(),
                family: *family,
                timeout: secs(*timeout)?,
                handshake_timeout: secs(*handshake_timeout)?,
            });
            let selected = select(&corpus, posts);
            let preds = spoil(&spec, &selected, *task, g.jobs.unwrap_or(1))?;
            let mut w = sink(out.as_deref())?;
            write_predictions(&preds, &mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Score {
            predictions,
            p1_mode,
            family,
            thresholds,
            bertscore,
            include_multipart,
            label,
        } => {
            let corpus = load(g)?;
            let thresholds = load_thresholds(thresholds.as_deref())?;
            let mut preds = read_prediction_file(predictions, &corpus)?;
            for p in &mut preds {
                p.family.get_or_insert(*family);
            }
            let opts = EvalOptions {
                p1_mode: *p1_mode,
                default_family: *family,
                include_multipart: *include_multipart,
            };
            let mut report = evaluate_run(&preds, &corpus, &thresholds, opts)?;
            if let Some(path) = bertscore {
                let scores = read_external_scores(path)?;
                report.add_external_scores("bertscore", &scores, &thresholds)?;
            }
            report.meta.label.clone_from(label);
            report.meta.seed = Some(g.seed);
            emit_report(&report, g.pretty)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Calibrate {
            judgments,
            fp_budget,
            plateau,
            family,
            out,
        } => calibrate(g, judgments, *fp_budget, *plateau, *family, out.as_deref()),
        Cmd::E2e { .. } => e2e(cli),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn secs(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|e| UsageError(format!("bad timeout {s}: {e}")).into())
}

fn mapping(spec: &str) -> Result<FieldMapping> {
    Ok(match spec {
        "webis" => FieldMapping::webis(),
        "canonical" => FieldMapping::default(),
        path => FieldMapping::load(Path::new(path))?,
    })
}

fn corpus_path(g: &Global) -> Result<&Path> {
    g.corpus
        .as_deref()
        .ok_or_else(|| UsageError("no corpus given: pass --corpus or set CLICKBAIT_CORPUS".into()).into())
}

fn load(g: &Global) -> Result<Corpus> {
    let path = corpus_path(g)?;
    let corpus = load_corpus(path, &mapping(&g.mapping)?)?;
    log::info!("loaded {} posts from {}", corpus.len(), path.display());
    Ok(corpus)
}

fn posts_of<'a>(corpus: &'a Corpus, split: Split, types: &[SpoilerType]) -> Vec<&'a ClickbaitPost> {
    corpus
        .posts
        .iter()
        .filter(|p| p.split == split && types.contains(&p.spoiler_type))
        .collect()
}

fn select<'a>(corpus: &'a Corpus, args: &PostArgs) -> Vec<&'a ClickbaitPost> {
    posts_of(corpus, args.split, &args.types)
}

fn retrieval_config(a: &RetrievalArgs) -> Result<RetrievalConfig> {
    let d = Bm25Params::default();
    let r = Rm3Params::default();
    let any_rm3_param = a.fb_docs.is_some() || a.fb_terms.is_some() || a.orig_weight.is_some();
    let stopwords = a
        .stoplist
        .as_deref()
        .map(|p| Analyzer::load_stoplist(p).with_context(|| format!("reading stoplist {}", p.display())))
        .transpose()?;
    Ok(RetrievalConfig {
        model: a.model,
        bm25: Bm25Params {
            k1: a.k1.unwrap_or(d.k1),
            b: a.b.unwrap_or(d.b),
        },
        mu: a.mu.unwrap_or(DEFAULT_MU),
        rm3: (a.rm3 || any_rm3_param).then(|| Rm3Params {
            fb_docs: a.fb_docs.unwrap_or(r.fb_docs),
            fb_terms: a.fb_terms.unwrap_or(r.fb_terms),
            orig_weight: a.orig_weight.unwrap_or(r.orig_weight),
        }),
        include_title: a.title,
        analyzer: Analyzer {
            stem: a.stem,
            stopwords,
        },
    })
}

fn validate(g: &Global, report_path: Option<&Path>) -> Result<ExitCode> {
    let report = load_corpus_report(corpus_path(g)?, &mapping(&g.mapping)?)?;
    if let Some(p) = report_path {
        let mut w = create(p)?;
        report.write_violations(&mut w)?;
        w.flush()?;
    }
    let violations: usize = report.rejected.iter().map(|r| r.violations.len()).sum();
    let mut stdout = io::stdout().lock();
    if g.pretty {
        writeln!(stdout, "valid posts:      {}", report.corpus.len())?;
        writeln!(stdout, "rejected records: {}", report.rejected.len())?;
        writeln!(stdout, "violations:       {violations}")?;
        for r in &report.rejected {
            for v in &r.violations {
                writeln!(stdout, "{}:{}: {}: {v}", r.file, r.line, r.post_id)?;
            }
        }
    } else {
        let summary = json!({
            "kind": "summary",
            "valid_posts": report.corpus.len(),
            "rejected_records": report.rejected.len(),
            "violations": violations,
        });
        writeln!(stdout, "{summary}")?;
        report.write_violations(&mut stdout)?;
    }
    Ok(if report.rejected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn split_stats(g: &Global) -> Result<ExitCode> {
    let corpus = load(g)?;
    let mut stdout = io::stdout().lock();
    let mut rows: Vec<(String, [usize; 3])> = SpoilerType::ALL
        .iter()
        .map(|t| (t.to_string(), Split::ALL.map(|s| corpus.count(*t, Some(s)))))
        .collect();
    let mut total = [0; 3];
    for (_, r) in &rows {
        for i in 0..3 {
            total[i] += r[i];
        }
    }
    rows.push(("total".into(), total));
    if g.pretty {
        writeln!(stdout, "{:<10} {:>8} {:>11} {:>8} {:>8}", "type", "train", "validation", "test", "total")?;
        for (name, r) in &rows {
            writeln!(stdout, "{:<10} {:>8} {:>11} {:>8} {:>8}", name, r[0], r[1], r[2], r.iter().sum::<usize>())?;
        }
    } else {
        for (name, r) in &rows {
            let rec = json!({"type": name, "train": r[0], "validation": r[1], "test": r[2], "total": r.iter().sum::<usize>()});
            writeln!(stdout, "{rec}")?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs `spec` on every post with `workers` generator instances; failed posts
/// become abstentions.
fn spoil(spec: &GeneratorSpec, posts: &[&ClickbaitPost], task: Option<clickspoil::bridge::Task>, workers: usize) -> Result<Vec<SpoilerPrediction>> {
    let workers = workers.clamp(1, posts.len().max(1));
    let chunk = posts.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<SpoilerPrediction>>> = std::thread::scope(|s| {
        let handles: Vec<_> = posts
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || -> Result<Vec<SpoilerPrediction>> {
                    let mut gen = spec.instantiate().map_err(|e| match e {
                        GeneratorFailure::Unavailable(m) | GeneratorFailure::Failed(m) => {
                            PipelineError::GeneratorUnavailable(m)
                        }
                    })?;
                    let mut out = Vec::with_capacity(part.len());
                    for post in part {
                        let t = task.unwrap_or_else(|| post.spoiler_type.into());
                        match gen.generate(post, t) {
                            Ok(p) => out.push(p),
                            Err(GeneratorFailure::Unavailable(m)) => {
                                return Err(PipelineError::GeneratorUnavailable(m).into())
                            }
                            Err(GeneratorFailure::Failed(m)) => {
                                log::warn!("post {}: {m}", post.id);
                                out.push(SpoilerPrediction::abstain(post.id.clone()));
                            }
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut preds = Vec::with_capacity(posts.len());
    for r in results {
        preds.extend(r?);
    }
    Ok(preds)
}

fn load_thresholds(path: Option<&Path>) -> Result<ThresholdSet> {
    match path {
        None => Ok(ThresholdSet::published()),
        Some(p) => ThresholdSet::read(BufReader::new(open(p)?)).with_context(|| format!("reading {}", p.display())),
    }
}

/// Reads prediction records or a run file, reporting every line whose post
/// id is not in the corpus.
fn read_prediction_file(path: &Path, corpus: &Corpus) -> Result<Vec<SpoilerPrediction>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let known: HashSet<&str> = corpus.posts.iter().map(|p| p.id.as_str()).collect();
    let mut is_run = None;
    let mut unknown = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(line).with_context(|| format!("{}:{}: malformed record", path.display(), i + 1))?;
        is_run.get_or_insert(v.get("rank").is_some());
        match v.get("post_id").and_then(|id| id.as_str()) {
            Some(id) if known.contains(id) => {}
            Some(id) => {
                eprintln!("{}:{}: post id {id:?} is not in the corpus", path.display(), i + 1);
                unknown += 1;
            }
            None => {
                eprintln!("{}:{}: record has no post_id", path.display(), i + 1);
                unknown += 1;
            }
        }
    }
    if unknown > 0 {
        bail!("{unknown} record(s) in {} do not match corpus posts", path.display());
    }
    if is_run == Some(true) {
        Ok(predictions_from_run(read_run(text.as_bytes())?, corpus)?)
    } else {
        Ok(read_predictions(text.as_bytes())?)
    }
}

fn read_external_scores(path: &Path) -> Result<HashMap<String, f64>> {
    #[derive(Deserialize)]
    struct Line {
        post_id: String,
        score: f64,
    }
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        out.insert(l.post_id, l.score);
    }
    Ok(out)
}

fn emit_report(report: &EvalReport, pretty: bool) -> Result<()> {
    let mut stdout = io::stdout().lock();
    if pretty {
        write!(stdout, "{}", report.render_table())?;
    } else {
        report.write_records(&mut stdout)?;
    }
    Ok(())
}

fn calibrate(
    g: &Global,
    judgments: &Path,
    fp_budget: usize,
    plateau: clickspoil::calibration::Plateau,
    default_family: ModelFamily,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let records = read_judgments(BufReader::new(open(judgments)?))?;
    let corpus = if records.iter().any(|r| r.spoiler_type.is_none()) {
        Some(load(g).context("judgments without spoiler_type need the corpus")?)
    } else {
        None
    };
    let mut groups: BTreeMap<_, Vec<JudgedSample>> = BTreeMap::new();
    for r in records {
        let ty = match r.spoiler_type {
            Some(t) => t,
            None => corpus
                .as_ref()
                .and_then(|c| c.get(&r.post_id))
                .map(|p| p.spoiler_type)
                .with_context(|| format!("judged post {:?} is not in the corpus", r.post_id))?,
        };
        groups
            .entry((r.metric, ty, r.family.unwrap_or(default_family)))
            .or_default()
            .push(JudgedSample {
                post_id: r.post_id,
                metric_score: r.score,
                human_correct: r.correct,
            });
    }
    let policy = SelectionPolicy {
        fp_budget: Some(fp_budget),
        plateau,
    };
    let mut set = ThresholdSet::default();
    let mut stdout = io::stdout().lock();
    for ((metric, ty, family), samples) in &groups {
        let grid = match family {
            ModelFamily::Qa => qa_grid(),
            ModelFamily::Retrieval => retrieval_grid(),
        };
        let table = sweep(samples, &grid, *metric, *ty, *family)?;
        let pick = select_threshold(&table, policy)?;
        set.insert(*metric, *ty, *family, pick)?;
        if g.pretty {
            writeln!(stdout, "{metric} / {ty} / {family} ({} judgments)", samples.len())?;
            writeln!(stdout, "  {:>9} {:>5} {:>5} {:>5} {:>5}", "threshold", "TP", "FP", "TN", "FN")?;
            for row in &table.rows {
                let c = row.counts;
                let mark = if row.threshold == pick { "*" } else { " " };
                writeln!(
                    stdout,
                    "{mark} {:>8.0}% {:>5} {:>5} {:>5} {:>5}",
                    100.0 * row.threshold,
                    c.true_pos,
                    c.false_pos,
                    c.true_neg,
                    c.false_neg
                )?;
            }
        } else {
            writeln!(stdout, "{}", json!({"table": table, "selected": pick}))?;
        }
    }
    if let Some(p) = out {
        let mut w = create(p)?;
        set.write(&mut w)?;
        w.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

fn e2e(cli: &Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let Cmd::E2e {
        mode,
        config,
        classifier,
        phrase_generator,
        passage_generator,
        agnostic_generator,
        thresholds,
        split,
        include_multipart,
        label,
        timeout,
    } = &cli.cmd
    else {
        unreachable!("dispatched on E2e")
    };
    let mut cfg: PipelineConfig = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file = PipelineFile::parse(&text)?;
            file.resolve(path.parent().unwrap_or(Path::new(".")))?
        }
        None => {
            let mode = mode.ok_or_else(|| UsageError("--mode is required without --config".into()))?;
            PipelineConfig::new(mode)
        }
    };
    if let Some(m) = mode {
        cfg.mode = *m;
    }
    if let Some(p) = classifier {
        let bundle = ClassifierBundle::read(BufReader::new(open(p)?))
            .with_context(|| format!("reading model {}", p.display()))?;
        cfg.classifier = Some(std::sync::Arc::new(bundle));
    }
    if thresholds.is_some() {
        cfg.thresholds = load_thresholds(thresholds.as_deref())?;
    }
    if *include_multipart {
        cfg.include_multipart = true;
    }
    if let Some(j) = g.jobs {
        cfg.workers = j;
    }
    cfg.seed = g.seed;

    let corpus = load(g)?;
    let timeout = secs(*timeout)?;
    let resolve = |flag: &Option<String>, current: Option<GeneratorSpec>, types: &[SpoilerType]| -> Result<Option<GeneratorSpec>> {
        let arg = match (flag, current) {
            (Some(s), _) => generators::parse(s).map_err(UsageError)?,
            (None, Some(spec)) => return Ok(Some(spec)),
            (None, None) => GeneratorArg::Fixed(GeneratorSpec::Retrieval(RetrievalConfig::default())),
        };
        Ok(Some(match arg {
            GeneratorArg::Fixed(spec) => generators::with_timeouts(spec, timeout),
            GeneratorArg::TunedBm25 { rm3 } => {
                let base = RetrievalConfig {
                    rm3: rm3.then(Rm3Params::default),
                    ..RetrievalConfig::default()
                };
                let train = posts_of(&corpus, Split::Train, types);
                let result = grid_search_bm25(&train, &bm25_grid(), &base)?;
                log::info!(
                    "tuned BM25 for {types:?}: k1={} b={} (P@1 {:.4} on {} posts)",
                    result.best.k1,
                    result.best.b,
                    result.objective,
                    result.posts
                );
                GeneratorSpec::Retrieval(RetrievalConfig {
                    bm25: result.best,
                    ..base
                })
            }
        }))
    };
    use clickspoil::Mode;
    if cfg.mode == Mode::None {
        cfg.agnostic_generator = resolve(
            agnostic_generator,
            cfg.agnostic_generator.take(),
            &[SpoilerType::Phrase, SpoilerType::Passage],
        )?;
    } else {
        cfg.phrase_generator = resolve(phrase_generator, cfg.phrase_generator.take(), &[SpoilerType::Phrase])?;
        cfg.passage_generator = resolve(passage_generator, cfg.passage_generator.take(), &[SpoilerType::Passage])?;
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;

    let posts: Vec<&ClickbaitPost> = corpus.posts.iter().filter(|p| p.split == *split).collect();
    let mut report = run_end_to_end(&posts, &cfg)?;
    report.meta.label.clone_from(label);
    emit_report(&report, g.pretty)?;
    Ok(ExitCode::SUCCESS)
}
