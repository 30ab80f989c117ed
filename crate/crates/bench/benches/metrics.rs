use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use clickspoil::metrics::{bleu, evaluate_run, meteor, SpoilerPrediction};
use clickspoil::{Corpus, ThresholdSet};
use clickspoil_bench::{synthetic_posts, token_pairs};

fn pairwise(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise");
    for len in [4, 16, 64] {
        let pairs = token_pairs(100, len);
        group.bench_with_input(BenchmarkId::new("bleu", len), &pairs, |b, pairs| {
            b.iter(|| {
                for (cand, reference) in pairs {
                    black_box(bleu(cand, reference).unwrap());
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("meteor", len), &pairs, |b, pairs| {
            b.iter(|| {
                for (cand, reference) in pairs {
                    black_box(meteor(cand, reference).unwrap());
                }
            })
        });
    }
    group.finish();
}

fn whole_run(c: &mut Criterion) {
    let posts = synthetic_posts(826, 10, 50);
    let preds: Vec<SpoilerPrediction> = posts
        .iter()
        .map(|p| SpoilerPrediction::text(p.id.clone(), p.paragraphs[0].clone()))
        .collect();
    let corpus = Corpus {
        posts,
        schema_version: String::new(),
    };
    let thresholds = ThresholdSet::published();
    let mut group = c.benchmark_group("evaluate_run");
    group.sample_size(10);
    group.bench_function("826_posts", |b| {
        b.iter(|| evaluate_run(black_box(&preds), &corpus, &thresholds, Default::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pairwise, whole_run);
criterion_main!(benches);
