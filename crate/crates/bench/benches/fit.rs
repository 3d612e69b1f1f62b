use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use exboot_bench::{bivariate_dataset, dataset};
use exboot_core::cox::{efficient_scores, fit, fit_from, log_partial_likelihood, FitOptions};
use exboot_core::WeightVector;
use std::hint::black_box;

fn cox(c: &mut Criterion) {
    let options = FitOptions::default();
    let mut group = c.benchmark_group("cox");
    for n in [400, 5000] {
        let data = dataset(n, 7);
        let ones = WeightVector::ones(n);
        group.bench_with_input(BenchmarkId::new("likelihood", n), &data, |b, data| {
            b.iter(|| log_partial_likelihood(black_box(&[0.5]), data, &ones).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fit_cold", n), &data, |b, data| b.iter(|| fit(data, &ones, &options).unwrap()));
        let base = fit(&data, &ones, &options).unwrap();
        group.bench_with_input(BenchmarkId::new("fit_warm", n), &data, |b, data| {
            b.iter(|| fit_from(data, &ones, &base.theta_hat, &options).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("efficient_scores", n), &data, |b, data| {
            b.iter(|| efficient_scores(&base.theta_hat, data).unwrap())
        });
    }
    let data = bivariate_dataset(1000, 7);
    let ones = WeightVector::ones(1000);
    group.bench_function("fit_cold_bivariate/1000", |b| b.iter(|| fit(&data, &ones, &options).unwrap()));
    group.finish();
}

criterion_group!(benches, cox);
criterion_main!(benches);
