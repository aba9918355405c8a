use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgeprice_core::oracle::{brute_force_bilevel_with, OracleLimits};
use edgeprice_core::par::Execution;
use edgeprice_core::scenario::{sample_instance, ScenarioConfig};

fn oracle_paths(c: &mut Criterion) {
    let cfg = ScenarioConfig { nodes: 30, price_grid: vec![0.01, 0.02, 0.03], ..ScenarioConfig::sized(0, 3, 2, 2) };
    let inst = sample_instance(&cfg).expect("bench instance");
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::new("enumerate", name), &exec, |b, &exec| {
            b.iter(|| brute_force_bilevel_with(&inst, OracleLimits::default(), exec).map(|r| r.best_profit).ok())
        });
    }
    group.finish();
}

criterion_group!(benches, oracle_paths);
criterion_main!(benches);
