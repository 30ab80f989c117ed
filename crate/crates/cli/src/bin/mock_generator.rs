//! Scriptable stand-in for an external spoiler generator, used to exercise
//! the bridge client.
//!
//! Usage: `mock-generator MODE [ARG]` where MODE is one of
//!
//! * `echo`: answer with paragraph 0 and its span
//! * `first-sentence`: answer with the first sentence of paragraph 0
//! * `reorder K`: collect K requests, answer them in reverse order
//! * `abstain`: abstain on everything
//! * `bad-id`: answer with a request id nobody asked for
//! * `bad-span`: answer with a span that does not slice to the text
//! * `version N`: advertise protocol version N
//! * `crash-after N`: answer N requests, then exit with status 1
//! * `silent`: handshake, then never answer
//! * `hang`: never say hello

use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use clickspoil::bridge::{GeneratorRequest, GeneratorResponse, Message, RankedParagraph, ResponseSpan, Task, PROTOCOL_VERSION};

fn answer(req: &GeneratorRequest, sentence_only: bool) -> GeneratorResponse {
    let p0 = &req.paragraphs[0];
    let text = if sentence_only {
        p0.split_inclusive(['.', '!', '?']).next().unwrap_or(p0).trim_end().to_string()
    } else {
        p0.clone()
    };
    let ranking = (0..req.paragraphs.len())
        .map(|i| RankedParagraph {
            paragraph_index: i as i32,
            score: -(i as f64),
        })
        .collect();
    GeneratorResponse {
        request_id: req.request_id,
        span: (!text.is_empty()).then(|| ResponseSpan(0, 0, text.chars().count())),
        abstain: text.is_empty(),
        spoiler_text: text,
        ranking: Some(ranking),
    }
}

fn send(out: &mut impl Write, msg: &Message) -> io::Result<()> {
    writeln!(out, "{}", msg.to_line())?;
    out.flush()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = args.first().map(String::as_str).unwrap_or("echo");
    let num = |default: u64| args.get(1).and_then(|a| a.parse().ok()).unwrap_or(default);
    let stdin = io::stdin();
    let mut out = io::stdout().lock();

    if mode == "hang" {
        // hold the pipe open until the client gives up
        for _ in stdin.lock().lines() {}
        return ExitCode::SUCCESS;
    }
    let version = if mode == "version" { num(99) as u32 } else { PROTOCOL_VERSION };
    let hello = Message::Hello {
        version,
        name: format!("mock-{mode}"),
        tasks: vec![Task::Phrase, Task::Passage, Task::Agnostic],
    };
    if send(&mut out, &hello).is_err() {
        return ExitCode::FAILURE;
    }

    let mut held: Vec<GeneratorResponse> = Vec::new();
    let mut answered = 0u64;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let req = match Message::parse(&line) {
            Ok(Message::Spoil(r)) => r,
            Ok(Message::Bye {}) => break,
            Ok(_) | Err(_) => {
                eprintln!("mock-generator: unexpected input {line:?}");
                return ExitCode::from(2);
            }
        };
        let mut resp = answer(&req, mode == "first-sentence");
        match mode {
            "silent" => continue,
            "abstain" => {
                resp.abstain = true;
                resp.spoiler_text.clear();
                resp.span = None;
            }
            "bad-id" => resp.request_id += 1000,
            "bad-span" => resp.spoiler_text.push('x'),
            "crash-after" if answered >= num(0) => return ExitCode::FAILURE,
            "reorder" => {
                held.push(resp);
                if held.len() as u64 >= num(2) {
                    while let Some(r) = held.pop() {
                        if send(&mut out, &Message::Spoiled(r)).is_err() {
                            return ExitCode::FAILURE;
                        }
                    }
                }
                continue;
            }
            _ => {}
        }
        answered += 1;
        if send(&mut out, &Message::Spoiled(resp)).is_err() {
            return ExitCode::FAILURE;
        }
    }
    while let Some(r) = held.pop() {
        let _ = send(&mut out, &Message::Spoiled(r));
    }
    ExitCode::SUCCESS
}
