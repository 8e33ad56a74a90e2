use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use pointint::grid::{
    random_state, spectral_forward, spectral_forward_seq, spectral_inverse, spectral_inverse_seq,
    GridSpec,
};
use pointint::hamiltonian::DriftHamiltonian;
use pointint::types::Velocity;

fn bench_transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_forward");
    for n in [32usize, 64] {
        let grid = GridSpec::new(n, 20.0).unwrap();
        let f = random_state(grid, 1);
        group.bench_with_input(BenchmarkId::new("parallel", n), &f, |b, f| {
            b.iter(|| spectral_forward(f))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &f, |b, f| {
            b.iter(|| spectral_forward_seq(f))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("spectral_roundtrip");
    for n in [32usize, 64] {
        let grid = GridSpec::new(n, 20.0).unwrap();
        let f = random_state(grid, 2);
        group.bench_with_input(BenchmarkId::new("parallel", n), &f, |b, f| {
            b.iter(|| spectral_inverse(&spectral_forward(f)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &f, |b, f| {
            b.iter(|| spectral_inverse_seq(&spectral_forward_seq(f)))
        });
    }
    group.finish();
}

fn bench_resolvent(c: &mut Criterion) {
    let mut group = c.benchmark_group("free_resolvent");
    for n in [32usize, 64] {
        let grid = GridSpec::new(n, 20.0).unwrap();
        let h = DriftHamiltonian::new(grid, Velocity([0.5, -0.2, 0.3]));
        let f = random_state(grid, 3);
        let lambda = Complex64::new(2.0, 0.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| h.resolvent(lambda, f).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_transforms, bench_resolvent);
criterion_main!(benches);
