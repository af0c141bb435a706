use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deckland::harness::{batch_seeds, run_batch, run_batch_sequential, Controller, Scenario};

fn batch(c: &mut Criterion) {
    let mut sc = Scenario::builtin("harsh").unwrap();
    sc.timeout = 60.0;
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    for n in [4usize, 16] {
        let seeds = batch_seeds(0, n);
        group.bench_with_input(BenchmarkId::new("parallel", n), &seeds, |b, seeds| {
            b.iter(|| run_batch(&sc, Controller::MpcNe, seeds).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &seeds, |b, seeds| {
            b.iter(|| run_batch_sequential(&sc, Controller::MpcNe, seeds).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
