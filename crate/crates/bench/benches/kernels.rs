use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gcrlab::{cartan, dec, gcr, realize, weakconv, Preset, RealizeOptions};
use gcrlab_bench::{preset_data, smooth_one_form};
use std::hint::black_box;

fn residuals(c: &mut Criterion) {
    let mut group = c.benchmark_group("gcr_residual");
    for n in [33, 65, 129] {
        let data = preset_data(Preset::Sphere, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| gcr::gcr_residual(black_box(d)).unwrap())
        });
    }
    group.finish();
}

fn realization(c: &mut Criterion) {
    let mut group = c.benchmark_group("realize");
    group.sample_size(10);
    for n in [33, 65] {
        let data = preset_data(Preset::Sphere, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| realize::realize(black_box(d), &RealizeOptions::default()).unwrap())
        });
    }
    let (_, _, w) = cartan::cartan_data(&preset_data(Preset::Sphere, 65).unwrap()).unwrap();
    group.bench_function("holonomy_65", |b| b.iter(|| realize::holonomy_residual(black_box(&w)).unwrap()));
    group.finish();
}

fn hodge(c: &mut Criterion) {
    let mut group = c.benchmark_group("hodge");
    group.sample_size(10);
    for n in [32, 64] {
        let form = smooth_one_form(n).unwrap();
        group.bench_with_input(BenchmarkId::new("d", n), &form, |b, f| b.iter(|| dec::d(black_box(f)).unwrap()));
        group.bench_with_input(BenchmarkId::new("green", n), &form, |b, f| {
            b.iter(|| dec::green(black_box(f)).unwrap())
        });
    }
    group.finish();
}

fn fakir(c: &mut Criterion) {
    c.bench_function("fakir_coefficients_1000", |b| {
        b.iter(|| weakconv::fakir_coefficients(black_box(1000), 2).unwrap())
    });
}

criterion_group!(benches, residuals, realization, hodge, fakir);
criterion_main!(benches);
