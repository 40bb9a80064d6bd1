use criterion::{criterion_group, criterion_main, Criterion};
use hsflow_core::envelope::{compute_envelope, compute_flow, uniform_t_grid};
use hsflow_core::legendre::{build_phi_tilde, uniform_s_grid};
use hsflow_core::measure::fs_measure;
use hsflow_core::poisson::solve_poisson;
use hsflow_core::solver::SorParams;
use hsflow_core::{ChartField, SphereGrid};

fn bench_envelope(c: &mut Criterion) {
    let grid = SphereGrid::new(97, 1.5);
    let phi = ChartField::zeros(grid, "phi");
    c.bench_function("envelope_cold_n97_t05", |b| {
        b.iter(|| compute_envelope(&phi, 0.5).unwrap())
    });
}

fn bench_legendre(c: &mut Criterion) {
    let grid = SphereGrid::new(65, 1.5);
    let phi = ChartField::zeros(grid, "phi");
    let fam = compute_flow(&phi, &uniform_t_grid(21, 1.0), &SorParams::default()).unwrap();
    let s_grid = uniform_s_grid(0.05, 8.0);
    c.bench_function("legendre_build_n65_nt21", |b| {
        b.iter(|| build_phi_tilde(&fam, &s_grid).unwrap())
    });
}

fn bench_poisson(c: &mut Criterion) {
    let grid = SphereGrid::new(97, 1.5);
    let rhs = fs_measure(grid);
    c.bench_function("poisson_fs_n97", |b| {
        b.iter(|| solve_poisson(&rhs, &SorParams::default()).unwrap())
    });
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = bench_envelope, bench_legendre, bench_poisson
}
criterion_main!(kernels);
