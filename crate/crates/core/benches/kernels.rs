use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use conelab::cone::{rotation_generators, Kappa};
use conelab::energy::{BoundarySpec, Functional};
use conelab::grid::PolarGrid;
use conelab::precond::Preconditioner;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let n = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut out = vec![("1".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if n > 1 {
        out.push((n.to_string(), rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()));
    }
    out
}

fn kernels(c: &mut Criterion) {
    let kappa = Kappa::new(4.0).unwrap();
    let grid = Arc::new(PolarGrid::new(1e-4, 128, 256).unwrap());
    let spec = BoundarySpec::perturbed(rotation_generators(0.4, 1), 256, 0.05).unwrap();
    let field = spec.homogeneous_seed(grid.clone(), kappa).unwrap();
    let func = Functional { kappa, eps: 1e-8, cap_degree: Some(0.5) };
    let pre = Preconditioner::new(&grid, kappa, Some(0.5));
    let grad = func.gradient(&field);

    let mut group = c.benchmark_group("threads");
    for (label, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("energy_gradient", &label), &pool, |b, pool| {
            b.iter(|| pool.install(|| func.gradient(&field)))
        });
        group.bench_with_input(BenchmarkId::new("preconditioner", &label), &pool, |b, pool| {
            b.iter(|| pool.install(|| pre.apply(&grad)))
        });
        group.bench_with_input(BenchmarkId::new("energy_value", &label), &pool, |b, pool| {
            b.iter(|| pool.install(|| func.value(&field)))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
