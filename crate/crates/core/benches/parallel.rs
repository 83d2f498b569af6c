use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lclab::berwald::batch_certify;
use lclab::discretepl::pl_harness;
use lclab::halfmeasure::library;
use lclab::poissonctl::{mc_functional, optimal_policy, Payoff};
use lclab::{Exec, Quadruple};

const MODES: [(&str, Exec); 2] = [
    ("parallel", Exec::Parallel),
    ("sequential", Exec::Sequential),
];

fn bench_mc(c: &mut Criterion) {
    let f = Payoff::new(vec![0.0, 1.0, -0.5, 2.0, 0.3, -1.0], 0.5).unwrap();
    let policy = optimal_policy(&f, 1.0).unwrap();
    let mut group = c.benchmark_group("mc_functional");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| mc_functional(exec, &policy, &f, 1.0, black_box(20_000), 1).unwrap())
        });
    }
    group.finish();
}

fn bench_batch_certify(c: &mut Criterion) {
    let measures = library();
    let quads = Quadruple::enumerate(4);
    let grid = [0.5, 1.0, 2.0];
    let mut group = c.benchmark_group("batch_certify");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| batch_certify(exec, black_box(&measures), &quads, &grid, 3).unwrap())
        });
    }
    group.finish();
}

fn bench_pl_harness(c: &mut Criterion) {
    let mut group = c.benchmark_group("pl_harness");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| pl_harness(exec, black_box(500), 15, &[0.5, 1.0, 2.0], 7).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_mc, bench_batch_certify, bench_pl_harness);
criterion_main!(benches);
