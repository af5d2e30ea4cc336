use std::hint::black_box;

use aspot_bench::{bench_instance, fixed_iterations};
use aspot_core::dual::{DualPoint, EntropicContext};
use aspot_core::{accept_partial, round_pot, solve, SolverKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn dual_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("dual_evaluation");
    for n in [100, 400] {
        let inst = bench_instance(n);
        let ctx = EntropicContext::new(inst, 1e-3).unwrap();
        let z = DualPoint::zeros(n, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(ctx.evaluate(&z).unwrap().mass()))
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_50_iterations");
    group.sample_size(10);
    let config = fixed_iterations(50);
    for n in [100, 200] {
        let inst = bench_instance(n);
        for kind in SolverKind::ALL {
            group.bench_with_input(BenchmarkId::new(kind.name(), n), &n, |b, _| {
                b.iter(|| black_box(accept_partial(solve(kind, &inst, &config)).unwrap().iterations))
            });
        }
    }
    group.finish();
}

fn rounding(c: &mut Criterion) {
    let inst = bench_instance(400);
    let x = inst.cost().mapv(|v| (-v).exp());
    c.bench_function("round_pot_400", |b| b.iter(|| black_box(round_pot(&x, &inst).unwrap().mass())));
}

criterion_group!(benches, dual_evaluation, solvers, rounding);
criterion_main!(benches);
