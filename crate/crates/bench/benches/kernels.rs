use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cronlab_bench::{mkg_data, phase_family};
use cronlab_core::fft::fft_nd;
use cronlab_core::mkg::{dt_max, step};
use cronlab_core::parametrix::checks::plateau_vector;
use cronlab_core::rng::Philox;
use cronlab_core::{GridSpec, C64};

fn fft(c: &mut Criterion) {
    let mut g = c.benchmark_group("fft_nd");
    for (dim, size) in [(2usize, 256usize), (3, 64)] {
        let mut rng = Philox::new(1, 0);
        let data: Vec<C64> = (0..size.pow(dim as u32)).map(|_| C64::new(rng.normal(), rng.normal())).collect();
        g.bench_with_input(BenchmarkId::from_parameter(format!("{dim}d-{size}")), &data, |b, d| {
            let mut buf = d.clone();
            b.iter(|| {
                fft_nd(black_box(&mut buf), dim, size, false);
                fft_nd(&mut buf, dim, size, true);
            })
        });
    }
    g.finish();
}

fn apply_u(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_u");
    g.sample_size(20);
    for size in [32usize, 64] {
        let grid = GridSpec::new(2, size, 8.0).unwrap();
        let fam = phase_family(grid, 1e-2, 3);
        let h = plateau_vector(&fam, 1).unwrap();
        g.bench_function(BenchmarkId::from_parameter(size), |b| b.iter(|| fam.apply(black_box(0.5), &h).unwrap()));
    }
    g.finish();
}

fn mkg_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("mkg_step");
    g.sample_size(10);
    for (dim, size) in [(2usize, 64usize), (3, 32)] {
        let grid = GridSpec::new(dim, size, std::f64::consts::TAU).unwrap();
        let s = mkg_data(grid, 1e-2, 5);
        let dt = 0.5 * dt_max(&grid);
        g.bench_function(BenchmarkId::from_parameter(format!("{dim}d-{size}")), |b| {
            b.iter(|| step(black_box(&s), dt).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, fft, apply_u, mkg_step);
criterion_main!(benches);
