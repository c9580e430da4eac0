use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use mdst_bench::solver_instances;
use mdst_core::center::{absolute_center_ordered, mdst, SkipBound};
use mdst_core::graph::{all_pairs_distances, TieOrder};

fn bench_all_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("all_pairs_distances");
    for (name, g) in solver_instances() {
        group.bench_with_input(BenchmarkId::from_parameter(&name), &g, |b, g| {
            b.iter(|| all_pairs_distances(black_box(g)))
        });
    }
    group.finish();
}

fn bench_absolute_center(c: &mut Criterion) {
    let mut group = c.benchmark_group("absolute_center");
    for (name, g) in solver_instances() {
        let dt = all_pairs_distances(&g);
        let order = TieOrder::identity(g.n());
        group.bench_with_input(BenchmarkId::new("plain", &name), &g, |b, g| {
            b.iter(|| absolute_center_ordered(black_box(g), &dt, &order, SkipBound::Off))
        });
        group.bench_with_input(BenchmarkId::new("skip-bound", &name), &g, |b, g| {
            b.iter(|| absolute_center_ordered(black_box(g), &dt, &order, SkipBound::On))
        });
    }
    group.finish();
}

fn bench_mdst(c: &mut Criterion) {
    let mut group = c.benchmark_group("mdst");
    for (name, g) in solver_instances() {
        group.bench_with_input(BenchmarkId::from_parameter(&name), &g, |b, g| {
            b.iter(|| mdst(black_box(g)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_all_pairs, bench_absolute_center, bench_mdst);
criterion_main!(benches);
