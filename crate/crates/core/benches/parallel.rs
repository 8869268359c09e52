use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use essay_core::model::{feature_names, train_ensemble_with, EnsembleMode, Hyperparameters};
use essay_core::par::Parallelism;
use essay_core::pipeline::{extract_corpus, Resources, RunConfig};
use essay_core::synthetic::{generate, records, GeneratorConfig};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn benches(c: &mut Criterion) {
    let recs = records(&generate(&GeneratorConfig {
        essays_per_topic: 60,
        ..GeneratorConfig::default()
    }));
    let res = Resources::standard();

    let mut group = c.benchmark_group("extract");
    group.sample_size(10);
    for (name, p) in MODES {
        let cfg = RunConfig {
            parallelism: p,
            ..RunConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| extract_corpus(black_box(&recs), &res, cfg).unwrap())
        });
    }
    group.finish();

    let (rows, _) = extract_corpus(&recs, &res, &RunConfig::default()).unwrap();
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.features.values.clone()).collect();
    let y: Vec<f64> = recs.iter().map(|r| r.manual_score()).collect();
    assert_eq!(x[0].len(), feature_names().len());
    let hyper = Hyperparameters {
        trees: 100,
        ..Hyperparameters::default()
    };
    let mut group = c.benchmark_group("train_random_forest");
    group.sample_size(10);
    for (name, p) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &p, |b, &p| {
            b.iter(|| train_ensemble_with(black_box(&x), &y, EnsembleMode::RandomForest, &hyper, 42, p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
