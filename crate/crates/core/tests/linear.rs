//! Single-measure models against a forward convolution oracle.

use std::collections::BTreeMap;

use ambigil_core::capacity::{capacity_pair, window_max_event, Side, Stat};
use ambigil_core::expectation::{Engine, TerminalSum};
use ambigil_core::model::random::{random_model, RandomModelSpec};
use ambigil_core::model::SequenceModel;
use ambigil_core::rng::SplitMix64;

/// Law of `S_n` after each step, plus the mass that met the window threshold.
fn window_probability(model: &SequenceModel, n: usize, end: usize, threshold: &dyn Fn(usize) -> f64) -> f64 {
    let delta = model.delta();
    let mut alive: BTreeMap<i64, f64> = BTreeMap::from([(0, 1.0)]);
    let mut hit = 0.0;
    for k in 1..=end {
        let step = model.step(k - 1);
        let law = &step.measures()[0];
        let mut next = BTreeMap::new();
        for (&s, &p) in &alive {
            for (&x, &q) in step.support().points().iter().zip(law) {
                *next.entry(s + x).or_insert(0.0) += p * q;
            }
        }
        alive = next;
        if k >= n {
            let t = threshold(k);
            alive.retain(|&s, p| {
                let met = s as f64 * delta >= t - 1e-9 * t.abs().max(1.0);
                if met {
                    hit += *p;
                }
                !met
            });
        }
    }
    hit
}

fn terminal_mean(model: &SequenceModel, f: impl Fn(f64) -> f64) -> f64 {
    let mut law: BTreeMap<i64, f64> = BTreeMap::from([(0, 1.0)]);
    for k in 0..model.horizon() {
        let step = model.step(k);
        let mut next = BTreeMap::new();
        for (&s, &p) in &law {
            for (&x, &q) in step.support().points().iter().zip(&step.measures()[0]) {
                *next.entry(s + x).or_insert(0.0) += p * q;
            }
        }
        law = next;
    }
    law.iter().map(|(&s, &p)| p * f(s as f64 * model.delta())).sum()
}

#[test]
fn single_measure_models_are_classical() {
    let spec = RandomModelSpec { max_measures: 1, max_horizon: 8, ..RandomModelSpec::default() };
    let e = Engine::default();
    for i in 0..50 {
        let m = random_model(&mut SplitMix64::stream(11, i), &spec);
        let sq = TerminalSum::new(m.delta(), |s| s * s - s);
        let pair = e.pair(&m, &sq).unwrap();
        let want = terminal_mean(&m, |s| s * s - s);
        assert!((pair.upper - want).abs() < 1e-10 && (pair.lower - want).abs() < 1e-10, "case {i}");

        let end = m.horizon();
        let n = 1 + (i as usize % end);
        let thr = |k: usize| 0.3 * k as f64 * m.delta();
        let event = window_max_event(&m, n, end, thr, Side::Ge, Stat::Sum).unwrap();
        let cap = capacity_pair(&e, &m, &event).unwrap();
        let want = window_probability(&m, n, end, &thr);
        assert!((cap.upper - want).abs() < 1e-10, "case {i}: {} vs {want}", cap.upper);
        assert!((cap.lower - want).abs() < 1e-10, "case {i}");
    }
}
