use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use rbg_bench::{coupled_matrix, coupled_model, coupled_sample, exponential, uniform_shape};
use rbg_core::bivariate::{gibbs_sample, BivariateRbg};
use rbg_core::characterize::{quantile_grid, truncated_moment_check};
use rbg_core::estimate::{sufficient_stats, FitMethod, FitOptions, ThetaVector};
use rbg_core::numerics::{reg_lower_gamma, QuadratureSpec};
use rbg_core::{fit_mle, Baseline};

fn univariate(c: &mut Criterion) {
    let d = uniform_shape(2.5);
    c.bench_function("reg_lower_gamma", |b| b.iter(|| reg_lower_gamma(black_box(2.5), black_box(1.7))));
    c.bench_function("cdf", |b| b.iter(|| d.cdf(black_box(0.3))));
    c.bench_function("quantile", |b| b.iter(|| d.quantile(black_box(0.42))));
    c.bench_function("sample_10k", |b| b.iter(|| d.sample(10_000, black_box(1))));
    let grid = quantile_grid(&d, 19).expect("grid");
    c.bench_function("truncated_moment_check", |b| b.iter(|| truncated_moment_check(&d, black_box(&grid))));
}

fn bivariate(c: &mut Criterion) {
    let e = exponential();
    let quad: QuadratureSpec = BivariateRbg::<Baseline>::default_quadrature();
    c.bench_function("normalize_coupled", |b| {
        b.iter(|| BivariateRbg::new(e, e, black_box(coupled_matrix()), quad))
    });
    let model = coupled_model();
    c.bench_function("gibbs_1k", |b| b.iter(|| gibbs_sample(&model, 1_000, 0, black_box(3))));
}

fn estimation(c: &mut Criterion) {
    let e = exponential();
    let data = coupled_sample(2_000, 11);
    c.bench_function("sufficient_stats_2k", |b| b.iter(|| sufficient_stats(black_box(&data), &e, &e)));
    let init = ThetaVector([1.7, 1.0, 1.7, 0.2, 0.0, 1.0, 0.0, -0.4]);
    let opts = FitOptions::with_method(FitMethod::Gradient).with_free(&[1, 3, 4, 8]);
    let quad = BivariateRbg::<Baseline>::default_quadrature();
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("gradient_2k", |b| b.iter(|| fit_mle(&data, &e, &e, Some(init), &opts, quad)));
    group.finish();
}

criterion_group!(benches, univariate, bivariate, estimation);
criterion_main!(benches);
