use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use seqsearch::mc::quantile_grid;
use seqsearch::*;

fn contest(c: &mut Criterion) {
    let u = make_uniform(0.0, 1.0).unwrap();
    let prizes = PrizeSchedule::winner_take_all(4, 1.0).unwrap();
    let profile = StrategyProfile::symmetric(4, 0.8);
    let mut group = c.benchmark_group("simulate_contest");
    group.sample_size(10);
    for reps in [50_000u64, 200_000] {
        group.throughput(Throughput::Elements(reps));
        for (name, parallel) in [("sequential", false), ("parallel", true)] {
            let mut cfg = SimulationConfig::new(reps, 1);
            cfg.parallel = parallel;
            group.bench_with_input(BenchmarkId::new(name, reps), &cfg, |b, cfg| {
                b.iter(|| simulate_contest(&profile, 0.05, &prizes, &u, black_box(cfg)).unwrap())
            });
        }
    }
    group.finish();
}

fn deviation(c: &mut Criterion) {
    let u = make_uniform(0.0, 1.0).unwrap();
    let prizes = PrizeSchedule::winner_take_all(2, 1.0).unwrap();
    let profile = StrategyProfile::symmetric(2, 0.8);
    let grid = quantile_grid(&u, 19);
    let mut group = c.benchmark_group("deviation_scan");
    group.sample_size(10);
    for (name, parallel) in [("sequential", false), ("parallel", true)] {
        let mut cfg = SimulationConfig::new(20_000, 2);
        cfg.parallel = parallel;
        group.bench_function(name, |b| {
            b.iter(|| mc::deviation_scan(&profile, 0, &grid, 0.1, &prizes, &u, black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

fn finite_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("finite_sweep");
    group.sample_size(10);
    group.bench_function("k3_c005_n2_9", |b| {
        b.iter(|| threshold_profile(3, black_box(0.05), 2..=9).unwrap())
    });
    group.finish();
}

criterion_group!(benches, contest, deviation, finite_sweep);
criterion_main!(benches);
