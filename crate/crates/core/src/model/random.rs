//! Randomized small models for property tests and verification sweeps.

use super::{LatticeSupport, SequenceModel, StepAmbiguity};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomModelSpec {
    pub min_horizon: usize,
    pub max_horizon: usize,
    pub max_measures: usize,
    pub max_points: usize,
    /// Points are drawn from `-index_range..=index_range`.
    pub index_range: i64,
    pub deltas: Vec<f64>,
    /// Chance that the model is i.i.d. rather than per-step.
    pub iid_chance: f64,
    /// Chance that a probability entry is forced to zero before normalization.
    pub zero_chance: f64,
}

impl Default for RandomModelSpec {
    fn default() -> Self {
        Self {
            min_horizon: 1,
            max_horizon: 6,
            max_measures: 4,
            max_points: 4,
            index_range: 3,
            deltas: vec![0.5, 1.0, 0.25],
            iid_chance: 0.3,
            zero_chance: 0.2,
        }
    }
}

/// Probability vector of length `len` with at least one positive entry.
pub fn random_measure(rng: &mut SplitMix64, len: usize, zero_chance: f64) -> Vec<f64> {
    let mut w: Vec<f64> =
        (0..len).map(|_| if rng.bernoulli(zero_chance) { 0.0 } else { rng.next_f64() + 1e-3 }).collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.below(len)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

pub fn random_step(rng: &mut SplitMix64, spec: &RandomModelSpec, delta: f64) -> StepAmbiguity {
    let span = (2 * spec.index_range + 1) as usize;
    let count = rng.int_inclusive(1, spec.max_points.min(span) as i64) as usize;
    let mut points: Vec<i64> = Vec::with_capacity(count);
    while points.len() < count {
        let k = rng.int_inclusive(-spec.index_range, spec.index_range);
        if !points.contains(&k) {
            points.push(k);
        }
    }
    points.sort_unstable();
    let measures = (0..rng.int_inclusive(1, spec.max_measures as i64))
        .map(|_| random_measure(rng, count, spec.zero_chance))
        .collect();
    StepAmbiguity::new(LatticeSupport::new(delta, points).expect("distinct sorted points"), measures)
        .expect("normalized measures")
}

pub fn random_model(rng: &mut SplitMix64, spec: &RandomModelSpec) -> SequenceModel {
    let horizon = rng.int_inclusive(spec.min_horizon as i64, spec.max_horizon as i64) as usize;
    let delta = spec.deltas[rng.below(spec.deltas.len())];
    if rng.bernoulli(spec.iid_chance) {
        SequenceModel::iid(random_step(rng, spec, delta), horizon).expect("positive horizon")
    } else {
        let steps = (0..horizon).map(|_| random_step(rng, spec, delta)).collect();
        SequenceModel::explicit(steps).expect("shared spacing")
    }
}
