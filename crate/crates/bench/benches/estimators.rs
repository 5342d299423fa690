use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rrmmse_bench::desk_fixture;
use rrmmse_core::{
    mmse_estimate_via, run_rrmmse, BlockPartition, DesignProblem, DiagonalPrior, NoiseModel, RrmmseConfig, SolveRoute,
};

fn posterior_routes(c: &mut Criterion) {
    let mut group = c.benchmark_group("one_step_mmse");
    for k in [100, 400, 800] {
        let f = desk_fixture(k);
        let prior = DiagonalPrior::uniform(f.geometry.bin_count(), 5e3).unwrap();
        for route in [SolveRoute::Innovation, SolveRoute::Information] {
            group.bench_with_input(BenchmarkId::new(format!("{route:?}"), k), &k, |b, _| {
                b.iter(|| mmse_estimate_via(&f.h, &prior, f.noise, &f.v, route).unwrap())
            });
        }
    }
    group.finish();
}

fn design_scan(c: &mut Criterion) {
    let f = desk_fixture(800);
    let prior = DiagonalPrior::uniform(f.geometry.bin_count(), 5e3).unwrap();
    let problem = DesignProblem::new(f.geometry.frequencies, f.geometry.ranges, prior, NoiseModel::new(5.0).unwrap()).unwrap();
    let partition = BlockPartition::default_for(&f.geometry.frequencies);
    let mut group = c.benchmark_group("design");
    group.sample_size(10);
    group.bench_function("occupancy_0.75", |b| b.iter(|| problem.design(&partition, 0.75).unwrap()));
    group.finish();
}

fn rrmmse_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("rrmmse_10_iterations");
    group.sample_size(20);
    let cfg = RrmmseConfig {
        max_iterations: Some(10),
        tolerance: 1e-300,
        ..Default::default()
    };
    for k in [100, 200, 400] {
        let f = desk_fixture(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| run_rrmmse(&f.h, &f.v, f.noise, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, posterior_routes, design_scan, rrmmse_runs);
criterion_main!(benches);
