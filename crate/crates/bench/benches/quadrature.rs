use cbs_bench::slab_medium;
use cbs_core::diffusion::{cone_quadrature, diffusion_params};
use cbs_core::kernel::total_rate;
use cbs_core::Vec3;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_cone(c: &mut Criterion) {
    let medium = slab_medium(1.0, 10.0);
    let params = diffusion_params(&medium, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    let mut group = c.benchmark_group("cone_quadrature");
    for kappa in [0.0, 0.5, 2.0, 10.0] {
        group.bench_with_input(BenchmarkId::from_parameter(kappa), &kappa, |b, &k| {
            b.iter(|| cone_quadrature(&params, k).unwrap())
        });
    }
    group.finish();
}

fn bench_rate(c: &mut Criterion) {
    let medium = slab_medium(1.0, 10.0);
    c.bench_function("total_rate", |b| {
        b.iter(|| total_rate(&medium, Vec3::new(0.0, 0.0, 1.0)).unwrap())
    });
}

criterion_group!(benches, bench_cone, bench_rate);
criterion_main!(benches);
