//! Brute-force evaluation over full outcome histories.
//!
//! These routines ignore the automaton compression entirely: payoffs are plain
//! functions of the outcome vector (lattice indices of `X_1..X_N`). They exist
//! to cross-check the engine on small models.

use super::PathPayoff;
use crate::error::{invalid, Error, Result};
use crate::model::SequenceModel;

/// Largest horizon accepted by [`upper_over_paths`].
pub const MAX_REFERENCE_HORIZON: usize = 20;

/// Nested supremum over every history: at each node, the best measure given
/// the exact outcomes so far. Summation order matches the engine.
pub fn upper_over_paths(model: &SequenceModel, f: &dyn Fn(&[i64]) -> f64, cap: u64) -> Result<f64> {
    if model.horizon() > MAX_REFERENCE_HORIZON {
        return Err(invalid(format!(
            "reference mode supports horizons up to {MAX_REFERENCE_HORIZON}, got {}",
            model.horizon()
        )));
    }
    let leaves = (0..model.horizon()).fold(1u64, |acc, i| acc.saturating_mul(model.step(i).support().len() as u64));
    if leaves > cap {
        return Err(Error::ResourceCap { estimated: leaves, cap });
    }
    let mut path = Vec::with_capacity(model.horizon());
    Ok(nested(model, f, &mut path))
}

fn nested(model: &SequenceModel, f: &dyn Fn(&[i64]) -> f64, path: &mut Vec<i64>) -> f64 {
    let k = path.len();
    if k == model.horizon() {
        return f(path);
    }
    let step = model.step(k);
    let points = step.support().points();
    let children: Vec<f64> = points
        .iter()
        .map(|&x| {
            path.push(x);
            let v = nested(model, f, path);
            path.pop();
            v
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    for entries in step.sparse_measures() {
        let mut acc = 0.0;
        for &(j, p) in entries {
            acc += p * children[j];
        }
        if acc > best {
            best = acc;
        }
    }
    best
}

/// Maximum over every adapted strategy of the linear expectation it induces.
///
/// A strategy assigns a measure to each history node before the horizon; all
/// assignments are enumerated one by one. Fails if there are more than `cap`
/// strategies.
pub fn upper_over_strategies(model: &SequenceModel, f: &dyn Fn(&[i64]) -> f64, cap: u64) -> Result<f64> {
    let n = model.horizon();
    // Internal nodes in breadth-first order, one slot per node.
    let mut node_depth = Vec::new();
    let mut width = 1u64;
    for k in 0..n {
        for _ in 0..width {
            node_depth.push(k);
        }
        width = width.saturating_mul(model.step(k).support().len() as u64);
        if node_depth.len() as u64 > 1 << 20 {
            return Err(Error::ResourceCap { estimated: node_depth.len() as u64, cap });
        }
    }
    let radix: Vec<usize> = node_depth.iter().map(|&k| model.step(k).measure_count()).collect();
    let total = radix.iter().fold(1u64, |acc, &r| acc.saturating_mul(r as u64));
    if total > cap {
        return Err(Error::ResourceCap { estimated: total, cap });
    }
    let mut choice = vec![0usize; radix.len()];
    let mut best = f64::NEG_INFINITY;
    let mut path = Vec::with_capacity(n);
    loop {
        let v = linear(model, f, &choice, 0, &mut path);
        if v > best {
            best = v;
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(best);
            }
            choice[i] += 1;
            if choice[i] < radix[i] {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Expectation under a fixed strategy; `node` is the breadth-first slot of the
/// current history.
fn linear(model: &SequenceModel, f: &dyn Fn(&[i64]) -> f64, choice: &[usize], node: usize, path: &mut Vec<i64>) -> f64 {
    let k = path.len();
    if k == model.horizon() {
        return f(path);
    }
    let step = model.step(k);
    let points = step.support().points();
    // Slots before depth k, and this node's rank within depth k.
    let (start, rank) = depth_offset(model, k, node);
    let next_start = start + level_size(model, k);
    let mut acc = 0.0;
    for &(j, p) in &step.sparse_measures()[choice[node]] {
        path.push(points[j]);
        let child = next_start + rank * points.len() + j;
        acc += p * linear(model, f, choice, child, path);
        path.pop();
    }
    acc
}

fn level_size(model: &SequenceModel, k: usize) -> usize {
    (0..k).map(|i| model.step(i).support().len()).product()
}

fn depth_offset(model: &SequenceModel, k: usize, node: usize) -> (usize, usize) {
    let start: usize = (0..k).map(|d| level_size(model, d)).sum();
    (start, node - start)
}

/// Run a payoff's automaton along an outcome vector and return its terminal value.
pub fn replay<P: PathPayoff + ?Sized>(payoff: &P, path: &[i64]) -> f64 {
    let mut aux = payoff.initial_aux();
    let mut sum = 0i64;
    for (i, &x) in path.iter().enumerate() {
        sum += x;
        aux = payoff.advance(i + 1, aux, x, sum);
    }
    payoff.terminal(sum, aux)
}
