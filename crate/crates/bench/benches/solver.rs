//! Benchmarks for the solver pipeline: equilibrium construction across
//! instance sizes, the backward-induction value family against brute-force
//! enumeration, single rollbacks per operator kind, and the exhaustive Nash
//! certificate.

use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynkin_core::{
    brute_force_value, generate, nash_check, solve, value_family, BermudanStoppingTime,
    EvaluationOperator, GenSpec, GeneratedInstance, OperatorSpec, SolveConfig,
};

fn instance(seed: u64, depth: u32, branching: u32, op: OperatorSpec) -> GeneratedInstance {
    generate(&GenSpec {
        seed,
        depth,
        branching,
        op1: op,
        op2: op,
    })
    .expect("generation succeeds")
}

/// Full equilibrium construction on growing trees with mixed operators.
fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    let cfg = SolveConfig::default();
    for (depth, branching) in [(2u32, 2u32), (3, 2), (3, 3), (4, 2), (5, 2), (4, 3)] {
        let gen = instance(
            40 + depth as u64,
            depth,
            branching,
            OperatorSpec::Entropic { gamma: 1.0 },
        );
        let nodes = gen.instance.tree().node_count();
        group.bench_with_input(
            BenchmarkId::new(format!("depth{depth}-branch{branching}"), nodes),
            &gen,
            |b, gen| b.iter(|| solve(black_box(&gen.instance), &cfg).unwrap()),
        );
    }
    group.finish();
}

/// Backward induction versus exhaustive enumeration of all stopping times
/// on the same capped problem (the oracle the test suite pins the solver to).
fn bench_value(c: &mut Criterion) {
    let mut group = c.benchmark_group("value-family");
    let gen = instance(7, 3, 3, OperatorSpec::Entropic { gamma: 2.0 });
    let op = gen.instance.operator(dynkin_core::Agent::One);
    let xi = gen.instance.stopper_payoff(dynkin_core::Agent::One);
    let schedule = gen.instance.schedule();
    let horizon = BermudanStoppingTime::horizon(schedule);
    let at_root = BermudanStoppingTime::at_root(schedule);

    group.bench_function("backward-induction", |b| {
        b.iter(|| value_family(black_box(op), black_box(xi), &horizon).unwrap())
    });
    group.sample_size(20);
    group.bench_function("brute-force-enumeration", |b| {
        b.iter(|| {
            brute_force_value(black_box(op), black_box(xi), &horizon, &at_root, 1_000_000).unwrap()
        })
    });
    group.finish();
}

/// One rollback from the horizon cut to the root cut per operator kind.
fn bench_rollback(c: &mut Criterion) {
    let mut group = c.benchmark_group("rollback");
    let gen = instance(11, 6, 2, OperatorSpec::MultipriorInf);
    let tree = gen.instance.tree();
    let schedule = gen.instance.schedule();
    let at_root = BermudanStoppingTime::at_root(schedule);
    let horizon = BermudanStoppingTime::horizon(schedule);
    let eta: BTreeMap<_, _> = horizon
        .stops()
        .iter()
        .map(|&id| (id, f64::from(id.0)))
        .collect();

    let ops: Vec<(&str, EvaluationOperator)> = vec![
        ("linear", EvaluationOperator::linear(tree)),
        ("entropic", EvaluationOperator::entropic(tree, 1.5).unwrap()),
        (
            "multiprior",
            gen.instance.operator(dynkin_core::Agent::One).clone(),
        ),
    ];
    for (name, op) in &ops {
        group.bench_function(*name, |b| {
            b.iter(|| op.rho(&at_root, &horizon, black_box(&eta)).unwrap())
        });
    }
    group.finish();
}

/// Exhaustive deviation certificate on a tree with 730 admissible strategies.
fn bench_certificate(c: &mut Criterion) {
    let mut group = c.benchmark_group("certificate");
    group.sample_size(10);
    let cfg = SolveConfig::default();
    let gen = instance(23, 3, 3, OperatorSpec::Linear);
    let res = solve(&gen.instance, &cfg).unwrap();
    group.bench_function("nash-check-depth3-branch3", |b| {
        b.iter(|| nash_check(black_box(&gen.instance), &res.tau1, &res.tau2, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_solve,
    bench_value,
    bench_rollback,
    bench_certificate
);
criterion_main!(benches);
