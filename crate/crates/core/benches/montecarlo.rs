use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use g0stat::distances::DistanceKind;
use g0stat::exec::Execution;
use g0stat::model::G0Params;
use g0stat::montecarlo::{run_experiment, ScenarioSpec};

fn null_experiment(c: &mut Criterion) {
    let spec = ScenarioSpec::null(G0Params::new(-1.5, 0.5, 1.0).unwrap(), 1)
        .unwrap()
        .with_reps(256, None);
    let kinds = DistanceKind::all(0.95);
    let mut group = c.benchmark_group("null_256_reps");
    group.sample_size(10);
    for (name, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_experiment(&spec, &kinds, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, null_experiment);
criterion_main!(benches);
