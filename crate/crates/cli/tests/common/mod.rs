#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clickspoil::corpus::write_corpus;
use clickspoil::{ClickbaitPost, Corpus, Span, SpoilerType, Split};

pub fn post(i: usize, ty: SpoilerType, split: Split) -> ClickbaitPost {
    let id = format!("{}-{}-{i:02}", split, ty);
    let (post_text, answer_para, spoiler) = match ty {
        SpoilerType::Phrase => (
            format!("Who is the mystery guest number {i}?"),
            format!("The mystery guest number {i} is Ada Lovelace{i}."),
            format!("Ada Lovelace{i}"),
        ),
        SpoilerType::Passage => (
            format!("Why do cats {i} sleep so much? The reason will surprise you"),
            format!("Cats {i} sleep so much because they conserve energy for hunting."),
            String::new(),
        ),
        SpoilerType::Multipart => (
            format!("These {i} tricks will change your life"),
            format!("First trick {i} is water. Second trick {i} is sleep."),
            String::new(),
        ),
    };
    let paragraphs = vec![
        format!("Welcome to our article {i} about many things."),
        answer_para.clone(),
        "Subscribe to our newsletter for more stories.".to_string(),
    ];
    let (spoilers, spans) = match ty {
        SpoilerType::Phrase => {
            let start = answer_para.find(&spoiler).unwrap();
            let start = answer_para[..start].chars().count();
            let end = start + spoiler.chars().count();
            (vec![spoiler], vec![Span::new(1, start, end)])
        }
        SpoilerType::Passage => {
            let n = answer_para.chars().count();
            (vec![answer_para.clone()], vec![Span::new(1, 0, n)])
        }
        SpoilerType::Multipart => (
            vec![format!("water"), format!("sleep")],
            vec![
                Span::new(1, answer_para.find("water").unwrap(), answer_para.find("water").unwrap() + 5),
                Span::new(1, answer_para.find("sleep").unwrap(), answer_para.find("sleep").unwrap() + 5),
            ],
        ),
    };
    ClickbaitPost {
        id,
        platform: None,
        post_text,
        target_title: format!("Article {i}"),
        paragraphs,
        spoilers,
        spoiler_positions: spans,
        spoiler_type: ty,
        split,
    }
}

/// Counts per (type, split): 6 train, 3 validation, 4 test; multipart half.
pub fn corpus() -> Corpus {
    let mut posts = Vec::new();
    for (split, n) in [(Split::Train, 6), (Split::Validation, 3), (Split::Test, 4)] {
        for ty in SpoilerType::ALL {
            let n = if ty == SpoilerType::Multipart { n / 2 } else { n };
            posts.extend((0..n).map(|i| post(i, ty, split)));
        }
    }
    Corpus {
        posts,
        schema_version: "clickspoil-1".into(),
    }
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub corpus: Corpus,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = corpus();
        for split in Split::ALL {
            let part = Corpus {
                posts: corpus.posts.iter().filter(|p| p.split == split).cloned().collect(),
                schema_version: corpus.schema_version.clone(),
            };
            let f = File::create(dir.path().join(format!("{split}.jsonl"))).unwrap();
            write_corpus(&part, f).unwrap();
        }
        Self { dir, corpus }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn corpus_dir(&self) -> &Path {
        self.dir.path()
    }

    /// `clickspoil` with the fixture corpus in canonical layout.
    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_clickspoil"))
            .arg("--corpus")
            .arg(self.corpus_dir())
            .args(["--mapping", "canonical"])
            .args(args)
            .env_remove("CLICKBAIT_CORPUS")
            .output()
            .unwrap()
    }
}

pub fn mock() -> String {
    env!("CARGO_BIN_EXE_mock-generator").to_string()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{e}: {l}")))
        .collect()
}
