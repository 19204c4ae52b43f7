use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nsdm::cli::run_bench;
use nsdm::problems::l2_quadratic_seeded;
use nsdm::verify::{check_prox_regularity, SamplingPlan};
use nsdm::{default_corpus, Execution, SolverConfig};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

/// The default corpus from 16 random starts each, solved as one batch.
fn multi_start(c: &mut Criterion) {
    let mut problems = Vec::new();
    for spec in default_corpus().unwrap() {
        for seed in 0..16 {
            let s = spec.with_random_start(seed).unwrap();
            let id = format!("{}_r{seed}", s.id);
            problems.push(s.with_id(id));
        }
    }
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("multi_start");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| run_bench(black_box(&problems), &cfg, 0, exec).unwrap())
        });
    }
    group.finish();
}

/// Sampling-based prox-regularity certificate on a 50-dimensional problem.
fn certificate_sampling(c: &mut Criterion) {
    let spec = l2_quadratic_seeded(50, 7).unwrap();
    let mut group = c.benchmark_group("prox_regularity");
    group.sample_size(10);
    for points in [2_000, 20_000] {
        for (name, exec) in MODES {
            let plan = SamplingPlan::new(spec.x0.clone(), 1.0, points, 42)
                .unwrap()
                .with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, points), &plan, |b, plan| {
                b.iter(|| check_prox_regularity(&spec.oracle, 1e-6, plan).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, multi_start, certificate_sampling);
criterion_main!(benches);
