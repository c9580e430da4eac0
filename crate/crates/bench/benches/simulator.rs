use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mdst_bench::simulation_instances;
use mdst_core::netsim::{InitMode, RunConfig, Simulation, TraceMode};
use mdst_core::proto::ProtocolMode;

fn bench_step_throughput(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulator_100_units");
    group.sample_size(20);
    for (name, g) in simulation_instances() {
        let cfg = RunConfig::new(g, ProtocolMode::Composed)
            .with_init(InitMode::Arbitrary(7))
            .with_seed(1)
            .with_horizon(100)
            .with_trace(TraceMode::Off);
        group.bench_with_input(BenchmarkId::from_parameter(&name), &cfg, |b, cfg| {
            b.iter(|| {
                let mut sim = Simulation::from_config(cfg).unwrap();
                for _ in 0..100 {
                    sim.step().unwrap();
                }
                sim.counters.messages_sent
            })
        });
    }
    group.finish();
}

fn bench_stabilization(c: &mut Criterion) {
    let mut group = c.benchmark_group("stabilize_clean");
    group.sample_size(10);
    for (name, g) in simulation_instances() {
        let cfg = RunConfig::new(g, ProtocolMode::Composed)
            .with_seed(3)
            .with_horizon(600)
            .with_trace(TraceMode::Off);
        group.bench_with_input(BenchmarkId::from_parameter(&name), &cfg, |b, cfg| {
            b.iter(|| mdst_core::checker::run_with_checker(cfg).unwrap().report.stabilized)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_step_throughput, bench_stabilization);
criterion_main!(benches);
