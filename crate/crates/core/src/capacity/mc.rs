//! Monte Carlo probabilities under fixed adversary strategies.
//!
//! Any fixed strategy induces one probability measure on paths, so its
//! probability of an event can never exceed the upper capacity. Replication `r`
//! draws from `SplitMix64::stream(seed, r)`; within a step the outcome is the
//! first support point whose cumulative mass exceeds a uniform draw.

use std::str::FromStr;

use serde::Serialize;

use super::{Indicator, PathAutomaton};
use crate::error::{invalid, Error, Result};
use crate::expectation::{Engine, Policy};
use crate::model::SequenceModel;
use crate::par;
use crate::rng::SplitMix64;

pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Always the same measure index.
    Constant(usize),
    /// At each step the measure giving the largest chance that the automaton
    /// accepts right after the step.
    GreedyOneStep,
    /// Measure index per step; the last entry repeats.
    Schedule(Vec<usize>),
    /// The engine's maximising policy.
    Optimal,
}

impl FromStr for Strategy {
    type Err = Error;

    /// `constant:K`, `greedy-one-step`, `schedule:K1,K2,...` or `optimal`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let index = |t: &str| {
            t.trim().parse::<usize>().map_err(|_| invalid(format!("bad measure index `{t}` in strategy `{s}`")))
        };
        match (name, arg) {
            ("constant", Some(a)) => Ok(Strategy::Constant(index(a)?)),
            ("greedy-one-step", None) => Ok(Strategy::GreedyOneStep),
            ("optimal", None) => Ok(Strategy::Optimal),
            ("schedule", Some(a)) => {
                let v = a.split(',').map(index).collect::<Result<Vec<_>>>()?;
                if v.is_empty() {
                    return Err(invalid("schedule strategy needs at least one index"));
                }
                Ok(Strategy::Schedule(v))
            }
            _ => Err(invalid(format!(
                "unknown strategy `{s}`; expected constant:K, greedy-one-step, schedule:K1,K2,... or optimal"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
}

enum Chooser {
    Fixed(Vec<usize>),
    Greedy,
    Policy(Box<Policy>),
}

pub fn mc_capacity_lower_bound<A: PathAutomaton + ?Sized>(
    engine: &Engine,
    model: &SequenceModel,
    event: &A,
    strategy: &Strategy,
    replications: usize,
    seed: u64,
) -> Result<McEstimate> {
    if replications < MIN_REPLICATIONS {
        return Err(invalid(format!("need at least {MIN_REPLICATIONS} replications, got {replications}")));
    }
    let n = model.horizon();
    let chooser = match strategy {
        Strategy::Constant(k) => Chooser::Fixed(vec![*k; n]),
        Strategy::Schedule(v) => Chooser::Fixed((0..n).map(|i| v[i.min(v.len() - 1)]).collect()),
        Strategy::GreedyOneStep => Chooser::Greedy,
        Strategy::Optimal => Chooser::Policy(Box::new(engine.optimal_policy(model, &Indicator(event))?.1)),
    };
    if let Chooser::Fixed(v) = &chooser {
        for (i, &k) in v.iter().enumerate() {
            let count = model.step(i).measure_count();
            if k >= count {
                return Err(invalid(format!("step {} has {count} measures, strategy asks for index {k}", i + 1)));
            }
        }
    }
    let hits = par::map_range(replications, engine.parallel, |r| {
        let mut rng = SplitMix64::stream(seed, r as u64);
        let (mut sum, mut state) = (0i64, event.initial());
        for k in 1..=n {
            let step = model.step(k - 1);
            let points = step.support().points();
            let measure = match &chooser {
                Chooser::Fixed(v) => v[k - 1],
                Chooser::Policy(p) => p.choose(k, sum, state),
                Chooser::Greedy => greedy(event, step.sparse_measures(), points, k, sum, state),
            };
            let entries = &step.sparse_measures()[measure];
            let u = rng.next_f64();
            let mut cum = 0.0;
            let mut j = entries[entries.len() - 1].0;
            for &(idx, p) in entries {
                cum += p;
                if u < cum {
                    j = idx;
                    break;
                }
            }
            sum += points[j];
            state = event.advance(k, state, points[j], sum);
        }
        event.accepts(sum, state)
    });
    let count = hits.iter().filter(|&&h| h).count();
    let p = count as f64 / replications as f64;
    let std_error = (p * (1.0 - p) / (replications - 1) as f64).sqrt();
    Ok(McEstimate { estimate: p, std_error, replications })
}

fn greedy<A: PathAutomaton + ?Sized>(
    event: &A,
    measures: &[Vec<(usize, f64)>],
    points: &[i64],
    k: usize,
    sum: i64,
    state: usize,
) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (m, entries) in measures.iter().enumerate() {
        let mut acc = 0.0;
        for &(j, p) in entries {
            let t = sum + points[j];
            if event.accepts(t, event.advance(k, state, points[j], t)) {
                acc += p;
            }
        }
        if acc > best {
            best = acc;
            arg = m;
        }
    }
    arg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{window_max_event, Constant, Side, Stat};
    use crate::model::make_rademacher_interval;

    fn theta12(n: usize) -> SequenceModel {
        SequenceModel::iid(make_rademacher_interval(1.0, 2.0, 2).unwrap(), n).unwrap()
    }

    #[test]
    fn parses_strategy_names() {
        assert_eq!("constant:1".parse::<Strategy>().unwrap(), Strategy::Constant(1));
        assert_eq!("greedy-one-step".parse::<Strategy>().unwrap(), Strategy::GreedyOneStep);
        assert_eq!("schedule:0, 1".parse::<Strategy>().unwrap(), Strategy::Schedule(vec![0, 1]));
        assert_eq!("optimal".parse::<Strategy>().unwrap(), Strategy::Optimal);
        assert!("adaptive".parse::<Strategy>().is_err());
        assert!("constant".parse::<Strategy>().is_err());
    }

    #[test]
    fn constant_wide_strategy_hits_quarter() {
        let m = theta12(2);
        let ev = window_max_event(&m, 2, 2, |_| 3.0, Side::Ge, Stat::Sum).unwrap();
        let r = mc_capacity_lower_bound(&Engine::default(), &m, &ev, &Strategy::Constant(1), 100_000, 3).unwrap();
        assert!((r.estimate - 0.25).abs() < 0.005, "{r:?}");
    }

    #[test]
    fn coin_and_sure_event() {
        let m = theta12(1);
        let ev = window_max_event(&m, 1, 1, |_| 1.0, Side::Ge, Stat::Sum).unwrap();
        let r = mc_capacity_lower_bound(&Engine::default(), &m, &ev, &Strategy::Constant(0), 100_000, 9).unwrap();
        assert!((r.estimate - 0.5).abs() < 0.005);
        let sure =
            mc_capacity_lower_bound(&Engine::default(), &m, &Constant(true), &Strategy::GreedyOneStep, 100, 1).unwrap();
        assert_eq!(sure.estimate, 1.0);
    }

    #[test]
    fn rejects_small_runs_and_bad_indices() {
        let m = theta12(1);
        let e = Engine::default();
        assert!(mc_capacity_lower_bound(&e, &m, &Constant(true), &Strategy::Optimal, 99, 1).is_err());
        assert!(mc_capacity_lower_bound(&e, &m, &Constant(true), &Strategy::Constant(2), 100, 1).is_err());
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = theta12(4);
        let ev = window_max_event(&m, 1, 4, |_| 3.0, Side::Ge, Stat::Sum).unwrap();
        let e = Engine::default();
        let a = mc_capacity_lower_bound(&e, &m, &ev, &Strategy::Optimal, 5000, 42).unwrap();
        let b = mc_capacity_lower_bound(&Engine::sequential(), &m, &ev, &Strategy::Optimal, 5000, 42).unwrap();
        assert_eq!(a, b);
    }
}
