use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use smf_bench::{random_sphere, sampled, spin_wave};
use smf_core::divcurl::{synthetic, verify};
use smf_core::flow::{step_implicit_midpoint, step_rk4_projected};
use smf_core::{DiagnosticsSample, PeriodicGrid, SchemeConfig};

fn derivative(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_derivative");
    for n in [64, 256, 1024] {
        let grid = PeriodicGrid::new(n).unwrap();
        let f = sampled(&grid);
        g.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| b.iter(|| grid.spectral_derivative(black_box(f)).unwrap()));
    }
    g.finish();
}

fn tension(c: &mut Criterion) {
    let mut g = c.benchmark_group("tension");
    for n in [64, 256] {
        let u = random_sphere(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| b.iter(|| black_box(u).tension().unwrap()));
    }
    g.finish();
}

fn steps(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    for n in [128, 256] {
        let u = random_sphere(n, 2);
        let cfg = SchemeConfig::midpoint(1e-4).forced();
        g.bench_with_input(BenchmarkId::new("implicit_midpoint", n), &u, |b, u| b.iter(|| step_implicit_midpoint(black_box(u), &cfg).unwrap()));
        let rk = SchemeConfig::rk4(1e-6).forced();
        g.bench_with_input(BenchmarkId::new("projected_rk4", n), &u, |b, u| b.iter(|| step_rk4_projected(black_box(u), &rk).unwrap()));
    }
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let u = spin_wave(256);
    c.bench_function("diagnostics_sample/256", |b| b.iter(|| DiagnosticsSample::of_state(black_box(&u)).unwrap()));
    let sys = synthetic::random_periodic(3, 129, 64).unwrap();
    c.bench_function("divcurl_verify/129x64", |b| b.iter(|| verify(black_box(&sys), 1e-5).unwrap()));
}

criterion_group!(benches, derivative, tension, steps, diagnostics);
criterion_main!(benches);
