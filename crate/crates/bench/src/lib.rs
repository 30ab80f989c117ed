//! Synthetic inputs shared by the benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clickspoil::{ClickbaitPost, Span, SpoilerType, Split};

fn vocabulary(size: usize) -> Vec<String> {
    const SYLLABLES: [&str; 12] = ["ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "de", "po", "ga", "fu"];
    (0..size)
        .map(|i| {
            let mut w = String::new();
            let mut n = i + 1;
            while n > 0 {
                w.push_str(SYLLABLES[n % SYLLABLES.len()]);
                n /= SYLLABLES.len();
            }
            w
        })
        .collect()
}

fn sentence(rng: &mut ChaCha8Rng, vocab: &[String], len: usize) -> String {
    let words: Vec<&str> = (0..len).map(|_| vocab.choose(rng).expect("non-empty").as_str()).collect();
    format!("{}.", words.join(" "))
}

/// A post whose spoiler is a sentence in one of `paragraphs` paragraphs of
/// about `words_per_paragraph` words each.
pub fn synthetic_post(seed: u64, paragraphs: usize, words_per_paragraph: usize) -> ClickbaitPost {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocabulary(2000);
    let paras: Vec<String> = (0..paragraphs.max(1))
        .map(|_| {
            let mut p = String::new();
            while p.split_whitespace().count() < words_per_paragraph {
                if !p.is_empty() {
                    p.push(' ');
                }
                let n = rng.gen_range(6..18);
                p.push_str(&sentence(&mut rng, &vocab, n));
            }
            p
        })
        .collect();
    let target = rng.gen_range(0..paras.len());
    let spoiler = paras[target].split_inclusive(". ").next().expect("non-empty").trim_end().to_string();
    let end = spoiler.chars().count();
    let post_text = spoiler
        .split_whitespace()
        .take(5)
        .chain(["you", "won't", "believe"])
        .collect::<Vec<_>>()
        .join(" ");
    ClickbaitPost {
        id: format!("synthetic-{seed}"),
        platform: None,
        post_text,
        target_title: sentence(&mut rng, &vocab, 8),
        paragraphs: paras,
        spoilers: vec![spoiler],
        spoiler_positions: vec![Span::new(target as i32, 0, end)],
        spoiler_type: if seed % 2 == 0 { SpoilerType::Phrase } else { SpoilerType::Passage },
        split: Split::Test,
    }
}

pub fn synthetic_posts(n: usize, paragraphs: usize, words_per_paragraph: usize) -> Vec<ClickbaitPost> {
    (0..n as u64).map(|s| synthetic_post(s, paragraphs, words_per_paragraph)).collect()
}

/// Candidate/reference token pairs of the given length with partial overlap.
pub fn token_pairs(n: usize, len: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab = vocabulary(300);
    (0..n)
        .map(|_| {
            let reference: Vec<String> = (0..len).map(|_| vocab.choose(&mut rng).expect("non-empty").clone()).collect();
            let candidate = reference
                .iter()
                .map(|w| if rng.gen_bool(0.3) { vocab.choose(&mut rng).expect("non-empty").clone() } else { w.clone() })
                .collect();
            (candidate, reference)
        })
        .collect()
}
