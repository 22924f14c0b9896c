use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gibbsgraph_bench::{disks, gaussian, graph, rods};
use gibbsgraph_core::gpp::oracle_partition;
use gibbsgraph_core::graph::sample_graph;
use gibbsgraph_core::hardcore::{
    default_glauber_steps, estimate_partition, glauber_sample, hardcore_partition,
    ln_hardcore_partition_sweep, SWEEP_STATE_LIMIT,
};
use gibbsgraph_core::rng::stream;
use gibbsgraph_core::weitz::{distance_ordering, weitz_layer_counts, DEFAULT_NODE_BUDGET};

fn bench_graphs(c: &mut Criterion) {
    let mut group = c.benchmark_group("graph");
    for (name, inst) in [("rods", rods()), ("disks", disks()), ("gaussian", gaussian())] {
        for n in [100, 1000] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                let mut rng = stream(1);
                b.iter(|| sample_graph(&inst.region, &inst.potential, n, &mut rng).unwrap());
            });
        }
    }
    group.finish();
}

fn bench_exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact");
    let small = graph(&disks(), 30, 2);
    group.bench_function("recursion/disks_30", |b| {
        b.iter(|| hardcore_partition(black_box(&small), 0.1).unwrap())
    });
    for n in [200, 600] {
        let g = graph(&rods(), n, 3);
        group.bench_with_input(BenchmarkId::new("sweep/rods", n), &g, |b, g| {
            b.iter(|| ln_hardcore_partition_sweep(black_box(g), 4.0 / n as f64, SWEEP_STATE_LIMIT).unwrap())
        });
    }
    group.finish();
}

fn bench_glauber(c: &mut Criterion) {
    let mut group = c.benchmark_group("glauber");
    for n in [100, 600] {
        let g = graph(&rods(), n, 4);
        let steps = default_glauber_steps(n, 0.01, 20.0);
        group.bench_with_input(BenchmarkId::new("rods", n), &g, |b, g| {
            let mut rng = stream(5);
            b.iter(|| glauber_sample(g, 4.0 / n as f64, steps, &mut rng, None).unwrap())
        });
    }
    group.finish();
}

fn bench_anneal(c: &mut Criterion) {
    let mut group = c.benchmark_group("anneal");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    let g = graph(&rods(), 100, 6);
    group.bench_function("rods_100", |b| {
        let mut rng = stream(7);
        b.iter(|| estimate_partition(&g, 0.04, 0.2, 1.0 / 9.0, &mut rng).unwrap())
    });
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let inst = rods();
    group.bench_function("rods_m24_10k", |b| {
        let mut rng = stream(8);
        b.iter(|| oracle_partition(&inst, 24, 10_000, &mut rng).unwrap())
    });
    group.finish();
}

fn bench_weitz(c: &mut Criterion) {
    let mut group = c.benchmark_group("weitz");
    let g = graph(&disks(), 300, 9);
    let ord = distance_ordering(&g);
    for depth in [6, 12] {
        group.bench_with_input(BenchmarkId::new("disks_300", depth), &depth, |b, &d| {
            b.iter(|| weitz_layer_counts(&g, 0, &ord, d, DEFAULT_NODE_BUDGET).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_graphs,
    bench_exact,
    bench_glauber,
    bench_anneal,
    bench_oracle,
    bench_weitz
);
criterion_main!(benches);
