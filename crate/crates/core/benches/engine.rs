//! Layer-parallel engine against the sequential fallback.
//!
//! With the default `parallel` feature both variants run; without it the
//! parallel flag is ignored and the two columns coincide.

use std::hint::black_box;

use ambigil_core::bounds::{verify_domination, DominationSpec};
use ambigil_core::capacity::mc::{mc_capacity_lower_bound, Strategy};
use ambigil_core::capacity::{upper_capacity, window_max_event, Side, Stat};
use ambigil_core::lil::d_n;
use ambigil_core::model::{make_rademacher_interval, SequenceModel};
use ambigil_core::Engine;
use criterion::{criterion_group, criterion_main, Criterion};

fn engines() -> [(&'static str, Engine); 2] {
    [("sequential", Engine::sequential()), ("parallel", Engine { parallel: true, ..Engine::default() })]
}

fn window_dp(c: &mut Criterion) {
    let model = SequenceModel::iid(make_rademacher_interval(1.0, 2.0, 2).unwrap(), 1024).unwrap();
    let event = window_max_event(&model, 1, 1024, |m| 0.5 * d_n(m), Side::Ge, Stat::Sum).unwrap();
    let mut g = c.benchmark_group("window_dp_n1024");
    g.sample_size(10);
    for (name, engine) in engines() {
        g.bench_function(name, |b| b.iter(|| upper_capacity(&engine, black_box(&model), &event).unwrap()));
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let model = SequenceModel::iid(make_rademacher_interval(1.0, 2.0, 2).unwrap(), 64).unwrap();
    let event = window_max_event(&model, 1, 64, d_n, Side::Ge, Stat::Sum).unwrap();
    let strategy = Strategy::GreedyOneStep;
    let mut g = c.benchmark_group("mc_greedy_20000");
    g.sample_size(10);
    for (name, engine) in engines() {
        g.bench_function(name, |b| {
            b.iter(|| mc_capacity_lower_bound(&engine, &model, &event, &strategy, 20_000, black_box(1)).unwrap())
        });
    }
    g.finish();
}

fn domination(c: &mut Criterion) {
    let spec = DominationSpec::default();
    let mut g = c.benchmark_group("verify_domination_100");
    g.sample_size(10);
    for (name, engine) in engines() {
        g.bench_function(name, |b| b.iter(|| verify_domination(&engine, &spec, 100, black_box(3)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, window_dp, monte_carlo, domination);
criterion_main!(benches);
