//! Parallel vs sequential comparison for the data-parallel inner loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dampc::numerics::{matmul_seq, Matrix, Rng};
use dampc::similarity::{population_correlation, FeatureBatch};

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for &n in &[64usize, 128, 256] {
        let mut rng = Rng::new(n as u64);
        let a = Matrix::gaussian(n, n, &mut rng);
        let b = Matrix::gaussian(n, n, &mut rng);
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |bench, _| {
            bench.iter(|| matmul_seq(&a, &b).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("par", n), &n, |bench, _| {
            bench.iter(|| dampc::numerics::matmul_par(&a, &b).unwrap())
        });
    }
    group.finish();
}

fn bench_population_correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("population_correlation");
    for &n in &[64usize, 256] {
        let mut rng = Rng::new(n as u64);
        let s = FeatureBatch::new(Matrix::gaussian(n, 64, &mut rng));
        let t = FeatureBatch::new(Matrix::gaussian(n, 64, &mut rng));
        // The dispatching entry point: parallel over source rows when the
        // `parallel` feature is on, sequential otherwise.
        let label = if cfg!(feature = "parallel") { "par" } else { "seq" };
        group.bench_with_input(BenchmarkId::new(label, n), &n, |bench, _| {
            bench.iter(|| population_correlation(&s, &t).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_matmul, bench_population_correlation);
criterion_main!(benches);
