//! Oracles that share no code with the engine: forward propagation of the
//! law of the partial sums under a single measure per step.

use std::collections::BTreeMap;

use ambigil_core::model::SequenceModel;

/// Law of `S_k` (lattice indices) pushed one step forward under the first measure.
fn convolve(law: &BTreeMap<i64, f64>, model: &SequenceModel, k: usize) -> BTreeMap<i64, f64> {
    let step = model.step(k);
    let mut next = BTreeMap::new();
    for (&s, &p) in law {
        for (&x, &q) in step.support().points().iter().zip(&step.measures()[0]) {
            *next.entry(s + x).or_insert(0.0) += p * q;
        }
    }
    next
}

/// `E[f(S_N)]` under the first measure of every step.
pub fn terminal_mean(model: &SequenceModel, f: impl Fn(f64) -> f64) -> f64 {
    let mut law = BTreeMap::from([(0, 1.0)]);
    for k in 0..model.horizon() {
        law = convolve(&law, model, k);
    }
    law.iter().map(|(&s, &p)| p * f(s as f64 * model.delta())).sum()
}

/// `P(exists m in [n, end] : hit(m, S_m))` under the first measure of every
/// step. Mass is removed from the law once it has hit.
pub fn window_probability(model: &SequenceModel, n: usize, end: usize, hit: &dyn Fn(usize, f64) -> bool) -> f64 {
    let delta = model.delta();
    let mut alive = BTreeMap::from([(0, 1.0)]);
    let mut total = 0.0;
    for k in 1..=end {
        alive = convolve(&alive, model, k - 1);
        if k >= n {
            alive.retain(|&s, p| {
                let met = hit(k, s as f64 * delta);
                if met {
                    total += *p;
                }
                !met
            });
        }
    }
    total
}

/// `P(S_n >= k)` for `S_n` a sum of `n` fair signs, by exact binomial sums.
pub fn coin_tail(n: usize, k: i64) -> f64 {
    let mut log_c = 0.0f64;
    let mut total = 0.0;
    for j in 0..=n {
        if j > 0 {
            log_c += ((n - j + 1) as f64).ln() - (j as f64).ln();
        }
        if 2 * j as i64 - n as i64 >= k {
            total += (log_c - n as f64 * std::f64::consts::LN_2).exp();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use ambigil_core::model::{make_rademacher_interval, SequenceModel};

    #[test]
    fn coin_by_hand() {
        let coin = SequenceModel::iid(make_rademacher_interval(1.0, 1.0, 1).unwrap(), 2).unwrap();
        assert_eq!(terminal_mean(&coin, |s| s * s), 2.0);
        assert_eq!(window_probability(&coin, 1, 2, &|_, s| s >= 1.0), 0.5);
        assert_eq!(window_probability(&coin, 2, 2, &|_, s| s >= 0.0), 0.75);
        assert!((coin_tail(2, 0) - 0.75).abs() < 1e-15);
        assert!((coin_tail(4, 4) - 1.0 / 16.0).abs() < 1e-15);
    }
}
