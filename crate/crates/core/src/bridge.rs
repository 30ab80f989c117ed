//! Line-delimited JSON protocol for external spoiler generators running as
//! child processes, and a client for it.
//!
//! The generator speaks first with a `hello` record; the client then sends
//! `spoil` records and reads `spoiled` records, and finishes with `bye`.
//! Every record is one JSON object on one line, discriminated by `type`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::calibration::ModelFamily;
use crate::corpus::{char_slice, ClickbaitPost, SpoilerType, TITLE};
use crate::metrics::SpoilerPrediction;
use crate::retrieval::ScoredPassage;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("could not start generator: {0}")]
    SpawnFailure(String),
    #[error("generator did not say hello within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("generator speaks protocol version {found}, expected {expected}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("no response to request {request_id} within {timeout:?}")]
    GeneratorTimeout { request_id: u64, timeout: Duration },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("generator crashed: {0}")]
    GeneratorCrashed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Phrase,
    Passage,
    Agnostic,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Phrase => "phrase",
            Task::Passage => "passage",
            Task::Agnostic => "agnostic",
        }
    }
}

impl From<SpoilerType> for Task {
    fn from(t: SpoilerType) -> Self {
        match t {
            SpoilerType::Phrase => Task::Phrase,
            SpoilerType::Passage => Task::Passage,
            SpoilerType::Multipart => Task::Agnostic,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "phrase" => Ok(Task::Phrase),
            "passage" => Ok(Task::Passage),
            "agnostic" => Ok(Task::Agnostic),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRequest {
    pub request_id: u64,
    pub post_text: String,
    pub target_title: String,
    pub paragraphs: Vec<String>,
    pub task: Task,
}

impl GeneratorRequest {
    /// Request for `post`; the id is assigned on submission.
    pub fn for_post(post: &ClickbaitPost, task: Task) -> Self {
        Self {
            request_id: 0,
            post_text: post.post_text.clone(),
            target_title: post.target_title.clone(),
            paragraphs: post.paragraphs.clone(),
            task,
        }
    }
}

/// Where the spoiler text sits: `(paragraph_index, char_start, char_end)`,
/// offsets in Unicode scalar values, paragraph -1 for the title.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSpan(pub i32, pub usize, pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedParagraph {
    pub paragraph_index: i32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorResponse {
    pub request_id: u64,
    #[serde(default)]
    pub spoiler_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<ResponseSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<RankedParagraph>>,
    #[serde(default)]
    pub abstain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello {
        version: u32,
        name: String,
        #[serde(default)]
        tasks: Vec<Task>,
    },
    Spoil(GeneratorRequest),
    Spoiled(GeneratorResponse),
    Bye {},
}

impl Message {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn parse(line: &str) -> Result<Self, BridgeError> {
        serde_json::from_str(line).map_err(|e| BridgeError::ProtocolViolation(format!("malformed record: {e}")))
    }
}

/// Checks a response against the request it answers.
pub fn validate_response(req: &GeneratorRequest, resp: &GeneratorResponse) -> Result<(), BridgeError> {
    let bad = |m: String| Err(BridgeError::ProtocolViolation(m));
    if resp.request_id != req.request_id {
        return bad(format!("response id {} for request {}", resp.request_id, req.request_id));
    }
    if resp.abstain {
        return Ok(());
    }
    if resp.spoiler_text.is_empty() {
        return bad(format!("request {}: empty spoiler without abstain", req.request_id));
    }
    let paragraph = |i: i32| {
        if i == TITLE {
            Some(req.target_title.as_str())
        } else {
            usize::try_from(i).ok().and_then(|i| req.paragraphs.get(i)).map(String::as_str)
        }
    };
    if let Some(ResponseSpan(p, s, e)) = resp.span {
        let Some(text) = paragraph(p) else {
            return bad(format!("request {}: span names missing paragraph {p}", req.request_id));
        };
        if char_slice(text, s, e) != Some(resp.spoiler_text.as_str()) {
            return bad(format!(
                "request {}: span ({p}, {s}, {e}) does not slice to the spoiler text",
                req.request_id
            ));
        }
    }
    if let Some(ranking) = &resp.ranking {
        if let Some(r) = ranking.iter().find(|r| paragraph(r.paragraph_index).is_none()) {
            return bad(format!(
                "request {}: ranking names missing paragraph {}",
                req.request_id, r.paragraph_index
            ));
        }
        if ranking.iter().any(|r| !r.score.is_finite()) {
            return bad(format!("request {}: non-finite ranking score", req.request_id));
        }
    }
    Ok(())
}

impl GeneratorResponse {
    /// The response as a prediction for `post_id`. A ranking, when given, is
    /// taken in the generator's order.
    pub fn into_prediction(self, post_id: &str, family: ModelFamily) -> SpoilerPrediction {
        let ranking = self.ranking.map(|r| {
            r.into_iter()
                .enumerate()
                .map(|(i, p)| ScoredPassage {
                    paragraph_index: p.paragraph_index,
                    score: p.score,
                    rank: i + 1,
                })
                .collect::<Vec<_>>()
        });
        let paragraph = self
            .span
            .map(|ResponseSpan(p, _, _)| p)
            .or_else(|| ranking.as_ref().and_then(|r| r.first()).map(|p| p.paragraph_index));
        SpoilerPrediction {
            post_id: post_id.to_string(),
            text: if self.abstain { String::new() } else { self.spoiler_text },
            abstained: self.abstain,
            paragraph,
            ranking,
            family: Some(family),
        }
    }
}

enum Event {
    Line(String),
    Eof,
    ReadError(String),
}

/// Client side of one generator process. Not shareable between threads;
/// run one handle per worker.
pub struct GeneratorHandle {
    child: Child,
    stdin: Option<ChildStdin>,
    events: Receiver<Event>,
    pub name: String,
    pub tasks: Vec<Task>,
    next_id: u64,
    pending: HashMap<u64, GeneratorRequest>,
    buffered: HashMap<u64, Result<GeneratorResponse, BridgeError>>,
    abandoned: HashSet<u64>,
    poisoned: Option<String>,
}

/// Starts `command` (program plus arguments) and waits for its hello.
pub fn spawn_generator(
    command: &[String],
    env: &[(String, String)],
    handshake_timeout: Duration,
) -> Result<GeneratorHandle, BridgeError> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| BridgeError::SpawnFailure("empty command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .envs(env.iter().map(|(k, v)| (k, v)))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| BridgeError::SpawnFailure(format!("{program}: {e}")))?;
    let stdout = child.stdout.take().expect("piped stdout");
    let stdin = child.stdin.take();
    let (tx, events) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let event = match line {
                Ok(l) => Event::Line(l),
                Err(e) => Event::ReadError(e.to_string()),
            };
            let stop = matches!(event, Event::ReadError(_));
            if tx.send(event).is_err() || stop {
                return;
            }
        }
        let _ = tx.send(Event::Eof);
    });
    let mut handle = GeneratorHandle {
        child,
        stdin,
        events,
        name: String::new(),
        tasks: Vec::new(),
        next_id: 1,
        pending: HashMap::new(),
        buffered: HashMap::new(),
        abandoned: HashSet::new(),
        poisoned: None,
    };
    match handle.events.recv_timeout(handshake_timeout) {
        Ok(Event::Line(line)) => match Message::parse(&line) {
            Ok(Message::Hello { version, name, tasks }) => {
                if version != PROTOCOL_VERSION {
                    handle.kill();
                    return Err(BridgeError::VersionMismatch {
                        expected: PROTOCOL_VERSION,
                        found: version,
                    });
                }
                handle.name = name;
                handle.tasks = tasks;
                Ok(handle)
            }
            Ok(other) => {
                handle.kill();
                Err(BridgeError::ProtocolViolation(format!("expected hello, got {other:?}")))
            }
            Err(e) => {
                handle.kill();
                Err(e)
            }
        },
        Ok(Event::Eof) | Ok(Event::ReadError(_)) | Err(RecvTimeoutError::Disconnected) => {
            let status = handle.child.wait().ok();
            Err(BridgeError::SpawnFailure(format!(
                "{program} exited before the handshake ({})",
                status.map_or("unknown status".into(), |s| s.to_string())
            )))
        }
        Err(RecvTimeoutError::Timeout) => {
            handle.kill();
            Err(BridgeError::HandshakeTimeout(handshake_timeout))
        }
    }
}

impl GeneratorHandle {
    pub fn is_poisoned(&self) -> bool {
        self.poisoned.is_some()
    }

    fn check_live(&self) -> Result<(), BridgeError> {
        match &self.poisoned {
            Some(why) => Err(BridgeError::GeneratorCrashed(why.clone())),
            None => Ok(()),
        }
    }

    fn poison(&mut self, err: BridgeError) -> BridgeError {
        self.poisoned = Some(err.to_string());
        self.kill();
        err
    }

    fn kill(&mut self) {
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// Sends a request without waiting and returns its id.
    pub fn submit(&mut self, mut req: GeneratorRequest) -> Result<u64, BridgeError> {
        self.check_live()?;
        if req.paragraphs.is_empty() {
            return Err(BridgeError::ProtocolViolation("request without paragraphs".into()));
        }
        req.request_id = self.next_id;
        self.next_id += 1;
        let line = Message::Spoil(req.clone()).to_line();
        let stdin = self.stdin.as_mut().expect("live handle has stdin");
        if let Err(e) = writeln!(stdin, "{line}").and_then(|_| stdin.flush()) {
            return Err(self.poison(BridgeError::GeneratorCrashed(format!("write failed: {e}"))));
        }
        self.pending.insert(req.request_id, req);
        Ok(self.next_id - 1)
    }

    /// Waits for the response to `request_id`. Responses to other pending
    /// requests that arrive first are kept for later calls.
    pub fn wait(&mut self, request_id: u64, timeout: Duration) -> Result<GeneratorResponse, BridgeError> {
        if let Some(r) = self.buffered.remove(&request_id) {
            return r;
        }
        self.check_live()?;
        if !self.pending.contains_key(&request_id) {
            return Err(BridgeError::ProtocolViolation(format!("request {request_id} is not pending")));
        }
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let event = match self.events.recv_timeout(left) {
                Ok(e) => e,
                Err(RecvTimeoutError::Timeout) => {
                    self.pending.remove(&request_id);
                    self.abandoned.insert(request_id);
                    return Err(BridgeError::GeneratorTimeout { request_id, timeout });
                }
                Err(RecvTimeoutError::Disconnected) => Event::Eof,
            };
            let line = match event {
                Event::Line(l) => l,
                Event::Eof => {
                    let status = self.child.try_wait().ok().flatten();
                    let why = format!(
                        "output closed with {} request(s) pending ({})",
                        self.pending.len(),
                        status.map_or("still running".into(), |s| s.to_string())
                    );
                    return Err(self.poison(BridgeError::GeneratorCrashed(why)));
                }
                Event::ReadError(e) => return Err(self.poison(BridgeError::GeneratorCrashed(e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            let resp = match Message::parse(&line) {
                Ok(Message::Spoiled(r)) => r,
                Ok(other) => {
                    let err = BridgeError::ProtocolViolation(format!("unexpected record {other:?}"));
                    return Err(self.poison(err));
                }
                Err(e) => return Err(self.poison(e)),
            };
            if self.abandoned.remove(&resp.request_id) {
                log::debug!("dropping late response to request {}", resp.request_id);
                continue;
            }
            let Some(req) = self.pending.remove(&resp.request_id) else {
                let err = BridgeError::ProtocolViolation(format!("response to unknown request {}", resp.request_id));
                return Err(self.poison(err));
            };
            let id = resp.request_id;
            let checked = validate_response(&req, &resp).map(|()| resp);
            if id == request_id {
                return checked;
            }
            self.buffered.insert(id, checked);
        }
    }

    pub fn request_spoiler(
        &mut self,
        req: GeneratorRequest,
        timeout: Duration,
    ) -> Result<GeneratorResponse, BridgeError> {
        let id = self.submit(req)?;
        self.wait(id, timeout)
    }

    /// Sends `bye` and waits up to `grace` for the process to exit before
    /// killing it. Returns whether it exited on its own with status 0.
    pub fn close(mut self, grace: Duration) -> bool {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = writeln!(stdin, "{}", Message::Bye {}.to_line());
        }
        let deadline = Instant::now() + grace;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return status.success(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => {
                    self.kill();
                    return false;
                }
            }
        }
    }
}

impl Drop for GeneratorHandle {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            if let Some(mut stdin) = self.stdin.take() {
                let _ = writeln!(stdin, "{}", Message::Bye {}.to_line());
            }
            let deadline = Instant::now() + Duration::from_millis(200);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = self.child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            self.kill();
        }
    }
}
