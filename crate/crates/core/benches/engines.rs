use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mkv_stefan::density::{absorbing_step, gamma_map, AbsorbingStepPlan};
use mkv_stefan::particles::simulate;
use mkv_stefan::{BoundaryPath, Execution, InitialLaw, SimulationConfig, SubProbabilityGrid};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn name(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn bench_absorbing_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("absorbing_step");
    for dx in [1e-3, 5e-4] {
        let plan = AbsorbingStepPlan::new(1e-3, dx);
        let nu = SubProbabilityGrid::flat(dx, 6.0, 1.0 / 3.0, 3.0);
        for e in MODES {
            group.bench_with_input(BenchmarkId::new(name(e), dx), &nu, |b, nu| {
                b.iter(|| absorbing_step(black_box(nu), &plan, e))
            });
        }
    }
    group.finish();
}

fn bench_gamma_map(c: &mut Criterion) {
    let mut group = c.benchmark_group("gamma_map");
    group.sample_size(10);
    let law = InitialLaw::uniform(0.0, 1.0).unwrap();
    for e in MODES {
        let cfg = SimulationConfig {
            execution: e,
            ..SimulationConfig::new(1.0, 0.25, 2e-3, 2e-3, 4.0).unwrap()
        };
        let ell = BoundaryPath::zero(cfg.dt, cfg.steps());
        group.bench_function(name(e), |b| {
            b.iter(|| gamma_map(&law, black_box(&ell), &cfg))
        });
    }
    group.finish();
}

fn bench_particles(c: &mut Criterion) {
    let mut group = c.benchmark_group("particles");
    group.sample_size(10);
    let law = InitialLaw::uniform(0.0, 1.0).unwrap();
    for n in [10_000usize, 100_000] {
        for e in MODES {
            let cfg = SimulationConfig {
                execution: e,
                seed: 1,
                ..SimulationConfig::new(0.5, 0.1, 1e-3, 1e-3, 4.0).unwrap()
            };
            group.bench_with_input(BenchmarkId::new(name(e), n), &n, |b, n| {
                b.iter(|| simulate(&law, *n, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_absorbing_step,
    bench_gamma_map,
    bench_particles
);
criterion_main!(benches);
