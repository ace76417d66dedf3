use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rcm_bench::{corpus, golden, golden_text};
use rcm_core::authority::decide_with_authority;
use rcm_core::oracle::filtered_solutions;
use rcm_core::reasoning::synthesize_solutions;
use rcm_core::{decide, Model};

fn parsing(c: &mut Criterion) {
    let text = golden_text("courts.rcm");
    c.bench_function("parse courts", |b| {
        b.iter(|| Model::parse(black_box(&text)))
    });
}

fn decision(c: &mut Criterion) {
    let m = golden("c_ex.rcm");
    c.bench_function("decide c_ex s3", |b| {
        b.iter(|| decide(black_box(&m.classifier), "s3"))
    });
    let m = golden("courts.rcm");
    let courts = m.courts.clone().unwrap();
    c.bench_function("decide courts with authority", |b| {
        b.iter(|| decide_with_authority(black_box(&m.classifier), &courts, "sstar"))
    });
}

fn synthesis(c: &mut Criterion) {
    let m = golden("example10.rcm");
    let trace = decide(&m.classifier, "sstar").unwrap();
    c.bench_function("synthesize example10", |b| {
        b.iter(|| synthesize_solutions(black_box(&m.classifier), &trace))
    });
    c.bench_function("oracle example10", |b| {
        b.iter(|| filtered_solutions(black_box(&m.classifier), &trace))
    });
}

fn consistency(c: &mut Criterion) {
    let models = corpus(50);
    c.bench_function("consistency corpus of 50", |b| {
        b.iter(|| {
            models
                .iter()
                .filter(|m| {
                    let cb = m.classifier.casebase().unwrap();
                    cb.is_consistent(m.hierarchy())
                })
                .count()
        })
    });
}

criterion_group!(benches, parsing, decision, synthesis, consistency);
criterion_main!(benches);
