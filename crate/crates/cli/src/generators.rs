//! Generator arguments of `e2e`.

use std::time::Duration;

use clickspoil::calibration::ModelFamily;
use clickspoil::pipeline::{ExternalSpec, GeneratorSpec};
use clickspoil::retrieval::{Bm25Params, Model, RetrievalConfig, Rm3Params};

pub const HELP: &str = "\
GENERATORS:
  bm25[:k1=K,b=B][+rm3]      BM25 ranking; the top paragraph is the spoiler
  qld[:mu=M][+rm3]           Dirichlet query likelihood
  tuned-bm25[+rm3]           BM25 with k1 and b tuned on the training posts of
                             the routed type (both types for --mode none)
  cmd:PROGRAM [ARGS...]      external generator speaking the bridge protocol
  cmd-retrieval:PROGRAM ...  same, thresholds of the retrieval family
Unset generators default to bm25.";

#[derive(Debug, Clone)]
pub enum GeneratorArg {
    Fixed(GeneratorSpec),
    TunedBm25 { rm3: bool },
}

pub fn parse(s: &str) -> Result<GeneratorArg, String> {
    let s = s.trim();
    for (prefix, family) in [("cmd:", ModelFamily::Qa), ("cmd-retrieval:", ModelFamily::Retrieval)] {
        if let Some(cmd) = s.strip_prefix(prefix) {
            let command: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if command.is_empty() {
                return Err(format!("{s:?}: missing command"));
            }
            let mut spec = ExternalSpec::new(command);
            spec.family = family;
            return Ok(GeneratorArg::Fixed(GeneratorSpec::External(spec)));
        }
    }
    let (body, rm3) = match s.strip_suffix("+rm3") {
        Some(b) => (b, true),
        None => (s, false),
    };
    if body == "tuned-bm25" {
        return Ok(GeneratorArg::TunedBm25 { rm3 });
    }
    let (name, params) = body.split_once(':').unwrap_or((body, ""));
    let model: Model = name.parse()?;
    let mut cfg = RetrievalConfig {
        model,
        rm3: rm3.then(Rm3Params::default),
        ..RetrievalConfig::default()
    };
    let mut bm25 = Bm25Params::default();
    for kv in params.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("{kv:?}: expected key=value"))?;
        let v: f64 = v.parse().map_err(|_| format!("{kv:?}: not a number"))?;
        match (model, k) {
            (Model::Bm25, "k1") => bm25.k1 = v,
            (Model::Bm25, "b") => bm25.b = v,
            (Model::Qld, "mu") => cfg.mu = v,
            _ => return Err(format!("{k:?} is not a parameter of {name}")),
        }
    }
    cfg.bm25 = bm25;
    Ok(GeneratorArg::Fixed(GeneratorSpec::Retrieval(cfg)))
}

pub fn with_timeouts(mut spec: GeneratorSpec, timeout: Duration) -> GeneratorSpec {
    if let GeneratorSpec::External(e) = &mut spec {
        e.timeout = timeout;
    }
    spec
}
