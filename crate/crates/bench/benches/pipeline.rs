use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use greener_bench::{annotated, random_corpus, sp_snippet};
use greener_core::{analyze, parse_program, serialize_program, simulate, Mode, SimConfig, Threshold};

fn bench_parse(c: &mut Criterion) {
    let text = serialize_program(&annotated(&sp_snippet(), 7), true);
    c.bench_function("parse/sp_snippet", |b| b.iter(|| parse_program(black_box(&text)).unwrap()));
}

fn bench_analyze(c: &mut Criterion) {
    let sp = sp_snippet();
    let mut g = c.benchmark_group("analyze");
    for w in [3u32, 7] {
        g.bench_with_input(BenchmarkId::new("sp_snippet", w), &w, |b, &w| {
            b.iter(|| analyze(black_box(&sp), Threshold::new(w).unwrap()).unwrap())
        });
    }
    let corpus = random_corpus(32, 7);
    g.bench_function("random_corpus_32", |b| {
        b.iter(|| {
            for p in &corpus {
                black_box(analyze(p, Threshold::DEFAULT).unwrap());
            }
        })
    });
    g.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let corpus: Vec<_> = random_corpus(8, 11).iter().map(|p| annotated(p, 3)).collect();
    let mut g = c.benchmark_group("simulate");
    for mode in Mode::ALL {
        let cfg = SimConfig { warps: 8, mode, mem_latency: 40, ..SimConfig::default() };
        g.bench_with_input(BenchmarkId::new("corpus_8", mode.name()), &cfg, |b, cfg| {
            b.iter(|| {
                for p in &corpus {
                    black_box(simulate(p, cfg).unwrap());
                }
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_parse, bench_analyze, bench_simulate);
criterion_main!(benches);
