use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ordcurv::measure::{perimeter, CurvatureEvaluator};
use ordcurv::QuadratureOptions;
use ordcurv_bench::{ball3, disk, kernels};

fn boundary_field(c: &mut Criterion) {
    let mut g = c.benchmark_group("boundary_curvature_2d");
    g.sample_size(10);
    for n in [64u32, 128, 256] {
        let set = disk(1.0 / n as f64);
        let cells = set.boundary_cells();
        for k in kernels(2) {
            g.bench_with_input(BenchmarkId::new(k.family_name(), n), &cells, |b, cells| {
                b.iter(|| {
                    let ev = CurvatureEvaluator::new(&set, &k, QuadratureOptions::default()).unwrap();
                    ev.cells(cells)
                })
            });
        }
    }
    g.finish();
}

fn boundary_field_3d(c: &mut Criterion) {
    let mut g = c.benchmark_group("boundary_curvature_3d");
    g.sample_size(10);
    let set = ball3(1.0 / 24.0);
    let cells = set.boundary_cells();
    let k = &kernels(3)[1];
    g.bench_function(k.family_name(), |b| {
        b.iter(|| {
            let ev = CurvatureEvaluator::new(&set, k, QuadratureOptions::default()).unwrap();
            ev.cells(&cells)
        })
    });
    g.finish();
}

fn perimeter_2d(c: &mut Criterion) {
    let mut g = c.benchmark_group("perimeter_2d");
    g.sample_size(10);
    for n in [64u32, 128] {
        let set = disk(1.0 / n as f64);
        let k = &kernels(2)[0];
        g.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, set| b.iter(|| perimeter(set, k).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, boundary_field, boundary_field_3d, perimeter_2d);
criterion_main!(benches);
