//! Sequential vs data-parallel execution of the two embarrassingly parallel kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grushin::geodesic::{gcc_certify, GccSettings};
use grushin::observability::ObservationRegion;
use grushin::spectral::{build_basis_with, BasisOptions, Grid1D, GrushinParams};
use grushin::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn fibers(c: &mut Criterion) {
    let params = GrushinParams::new(1.0, 1).unwrap();
    let grid = Grid1D::interior(200).unwrap();
    let mut group = c.benchmark_group("basis_cutoff_16");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                let options = BasisOptions { exec, ..Default::default() };
                build_basis_with(&params, 16.0, &grid, options).unwrap()
            })
        });
    }
    group.finish();
}

fn rays(c: &mut Criterion) {
    let region = ObservationRegion::new(1.0, 1.0 + std::f64::consts::FRAC_PI_2).unwrap();
    let mut group = c.benchmark_group("gcc_64_rays");
    group.sample_size(10);
    for (name, exec) in MODES {
        let settings = GccSettings {
            samples: 64,
            dt: 1e-3,
            delta: 0.1,
            seed: 7,
            exec,
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &settings, |b, s| {
            b.iter(|| gcc_certify(1.0, &region, 0.2, 50.0, s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fibers, rays);
criterion_main!(benches);
