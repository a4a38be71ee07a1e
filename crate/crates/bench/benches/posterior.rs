use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use series_prior::basis::unit_grid;
use series_prior::{Basis, DensityModel, Evaluation, Hyper, ModelSizePrior, Moments, SizeFamily, TrueDensity};

fn model(order: usize, min: usize, max: usize) -> DensityModel {
    let prior = ModelSizePrior::new(SizeFamily::Geometric { p: 0.5 }, min, max).unwrap();
    DensityModel::new(order, prior, Hyper::Scalar(1.0)).unwrap()
}

fn exact_histogram(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_q1");
    let grid = unit_grid(100);
    let m = model(1, 5, 25);
    for n in [100usize, 1000] {
        let data = TrueDensity::mixture_51().sample(n, 3).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| m.posterior(black_box(d), &grid, Moments::First, Evaluation::Exact).unwrap())
        });
    }
    group.finish();
}

fn sampled_terms(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_q3");
    group.sample_size(10);
    let grid = unit_grid(100);
    let m = model(3, 5, 25);
    let data = TrueDensity::mixture_51().sample(100, 3).unwrap();
    for draws in [300usize, 3000] {
        group.bench_with_input(BenchmarkId::from_parameter(draws), &draws, |b, &n| {
            b.iter(|| {
                m.posterior(&data, &grid, Moments::Second, Evaluation::MonteCarlo { draws: n, seed: 1 })
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn basis_eval(c: &mut Criterion) {
    let basis = Basis::with_dimension(4, 25).unwrap();
    let grid = unit_grid(1000);
    c.bench_function("basis_eval_local_q4_j25", |b| {
        b.iter(|| {
            grid.iter()
                .map(|&x| basis.eval_local(black_box(x)).unwrap().values[0])
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, exact_histogram, sampled_terms, basis_eval);
criterion_main!(benches);
