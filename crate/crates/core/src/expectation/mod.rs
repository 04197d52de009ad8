//! Upper and lower expectations by backward induction.
//!
//! A payoff is presented as a finite automaton over the path: the engine tracks
//! the lattice partial sum `S_k` and an auxiliary state, and the payoff is a
//! function of `(S_N, aux)` at the horizon. Layer `k` of the value table holds
//! `V_k(s, a)`, and
//!
//! ```text
//! V_{k-1}(s, a) = max_theta sum_j p_theta(j) * V_k(s + x_j, advance(k, a, x_j, s + x_j))
//! ```
//!
//! The measure chosen at step `k` may depend on the whole realised history
//! through `(s, a)`; this adapted adversary is what nested conditional
//! suprema compute. Inner sums run over the positive-mass support points in
//! increasing order and ties in the maximum go to the lowest measure index, so
//! every value is bit-identical for any number of worker threads.

pub mod reference;

use crate::error::{invalid, Error, Result};
use crate::model::{SequenceModel, StepAmbiguity, TruncationSpec};
use crate::par;

/// Default bound on the total number of `(layer, sum, aux)` states.
pub const DEFAULT_STATE_CAP: u64 = 1 << 28;

/// A path functional evaluated through a finite automaton.
///
/// Sums and jumps are lattice indices: the real partial sum is `sum * delta`.
pub trait PathPayoff: Sync {
    fn aux_count(&self) -> usize;

    fn initial_aux(&self) -> usize {
        0
    }

    /// Auxiliary state after step `step` (1-based) moved the sum by `x` to `sum`.
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize;

    /// Payoff at the horizon.
    fn terminal(&self, sum: i64, aux: usize) -> f64;

    /// A state whose value no longer depends on the future. Must agree with
    /// `terminal` for every sum, and `advance` must keep the state settled.
    fn settled(&self, _aux: usize) -> Option<f64> {
        None
    }
}

impl<P: PathPayoff + ?Sized> PathPayoff for &P {
    fn aux_count(&self) -> usize {
        (**self).aux_count()
    }
    fn initial_aux(&self) -> usize {
        (**self).initial_aux()
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        (**self).advance(step, aux, x, sum)
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        (**self).terminal(sum, aux)
    }
    fn settled(&self, aux: usize) -> Option<f64> {
        (**self).settled(aux)
    }
}

/// `f(S_N)` for a function of the real terminal sum.
pub struct TerminalSum<F> {
    delta: f64,
    f: F,
}

impl<F: Fn(f64) -> f64 + Sync> TerminalSum<F> {
    pub fn new(delta: f64, f: F) -> Self {
        Self { delta, f }
    }
}

impl<F: Fn(f64) -> f64 + Sync> PathPayoff for TerminalSum<F> {
    fn aux_count(&self) -> usize {
        1
    }
    fn advance(&self, _: usize, _: usize, _: i64, _: i64) -> usize {
        0
    }
    fn terminal(&self, sum: i64, _: usize) -> f64 {
        (self.f)(sum as f64 * self.delta)
    }
}

/// Payoff assembled from closures.
pub struct FnPayoff<A, T> {
    aux_count: usize,
    initial: usize,
    advance: A,
    terminal: T,
}

impl<A, T> FnPayoff<A, T>
where
    A: Fn(usize, usize, i64, i64) -> usize + Sync,
    T: Fn(i64, usize) -> f64 + Sync,
{
    pub fn new(aux_count: usize, initial: usize, advance: A, terminal: T) -> Self {
        Self { aux_count, initial, advance, terminal }
    }
}

impl<A, T> PathPayoff for FnPayoff<A, T>
where
    A: Fn(usize, usize, i64, i64) -> usize + Sync,
    T: Fn(i64, usize) -> f64 + Sync,
{
    fn aux_count(&self) -> usize {
        self.aux_count
    }
    fn initial_aux(&self) -> usize {
        self.initial
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        (self.advance)(step, aux, x, sum)
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        (self.terminal)(sum, aux)
    }
}

/// `-phi`.
pub struct Negated<P>(pub P);

impl<P: PathPayoff> PathPayoff for Negated<P> {
    fn aux_count(&self) -> usize {
        self.0.aux_count()
    }
    fn initial_aux(&self) -> usize {
        self.0.initial_aux()
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        self.0.advance(step, aux, x, sum)
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        -self.0.terminal(sum, aux)
    }
    fn settled(&self, aux: usize) -> Option<f64> {
        self.0.settled(aux).map(|v| -v)
    }
}

/// `lambda * phi + c`.
pub struct Affine<P> {
    pub inner: P,
    pub scale: f64,
    pub shift: f64,
}

impl<P: PathPayoff> PathPayoff for Affine<P> {
    fn aux_count(&self) -> usize {
        self.inner.aux_count()
    }
    fn initial_aux(&self) -> usize {
        self.inner.initial_aux()
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        self.inner.advance(step, aux, x, sum)
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        self.scale * self.inner.terminal(sum, aux) + self.shift
    }
}

/// `phi + psi` on the product of the two auxiliary spaces.
pub struct SumOf<P, Q>(pub P, pub Q);

impl<P: PathPayoff, Q: PathPayoff> PathPayoff for SumOf<P, Q> {
    fn aux_count(&self) -> usize {
        self.0.aux_count() * self.1.aux_count()
    }
    fn initial_aux(&self) -> usize {
        self.0.initial_aux() * self.1.aux_count() + self.1.initial_aux()
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        let m = self.1.aux_count();
        let a = self.0.advance(step, aux / m, x, sum);
        let b = self.1.advance(step, aux % m, x, sum);
        a * m + b
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        let m = self.1.aux_count();
        self.0.terminal(sum, aux / m) + self.1.terminal(sum, aux % m)
    }
}

/// Forwards a payoff but never reports settled states, so every layer is
/// computed by the full recursion.
pub struct Unsettled<P>(pub P);

impl<P: PathPayoff> PathPayoff for Unsettled<P> {
    fn aux_count(&self) -> usize {
        self.0.aux_count()
    }
    fn initial_aux(&self) -> usize {
        self.0.initial_aux()
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        self.0.advance(step, aux, x, sum)
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        self.0.terminal(sum, aux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationPair {
    pub lower: f64,
    pub upper: f64,
}

/// Range of reachable lattice sums after each step.
#[derive(Debug, Clone)]
pub(crate) struct Layers {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Layers {
    pub fn of(model: &SequenceModel) -> Self {
        let n = model.horizon();
        let mut lo = vec![0i64; n + 1];
        let mut hi = vec![0i64; n + 1];
        for k in 1..=n {
            let s = model.step(k - 1).support();
            lo[k] = lo[k - 1] + s.min_index();
            hi[k] = hi[k - 1] + s.max_index();
        }
        Self { lo, hi }
    }

    pub fn width(&self, k: usize) -> usize {
        (self.hi[k] - self.lo[k] + 1) as usize
    }

    pub fn total_states(&self, aux: usize) -> u64 {
        (0..self.lo.len())
            .map(|k| self.width(k) as u64)
            .fold(0u64, |acc, w| acc.saturating_add(w.saturating_mul(aux as u64)))
    }
}

/// Measure index chosen by the maximiser at every state of every layer.
#[derive(Debug, Clone)]
pub struct Policy {
    layers: Layers,
    aux: usize,
    /// `choice[k-1]` is indexed like layer `k-1` and picks the measure for step `k`.
    choice: Vec<Vec<u16>>,
}

impl Policy {
    /// Measure for step `step` (1-based) when the sum before it is `sum`.
    pub fn choose(&self, step: usize, sum: i64, aux: usize) -> usize {
        let k = step - 1;
        let idx = (sum - self.layers.lo[k]) as usize * self.aux + aux;
        self.choice[k][idx] as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Engine {
    pub state_cap: u64,
    /// Split each layer across the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
}

impl Default for Engine {
    fn default() -> Self {
        Self { state_cap: DEFAULT_STATE_CAP, parallel: cfg!(feature = "parallel") }
    }
}

impl Engine {
    pub fn sequential() -> Self {
        Self { parallel: false, ..Self::default() }
    }

    pub fn with_cap(state_cap: u64) -> Self {
        Self { state_cap, ..Self::default() }
    }

    /// Number of DP states the payoff would need on this model.
    pub fn estimate_states<P: PathPayoff + ?Sized>(&self, model: &SequenceModel, payoff: &P) -> u64 {
        Layers::of(model).total_states(payoff.aux_count())
    }

    fn check(&self, layers: &Layers, aux: usize) -> Result<()> {
        if aux == 0 {
            return Err(invalid("payoff has no auxiliary states"));
        }
        let estimated = layers.total_states(aux);
        if estimated > self.state_cap {
            return Err(Error::ResourceCap { estimated, cap: self.state_cap });
        }
        Ok(())
    }

    /// `E~[phi]`.
    pub fn upper<P: PathPayoff + ?Sized>(&self, model: &SequenceModel, payoff: &P) -> Result<f64> {
        self.run(model, payoff, false).map(|(v, _)| v)
    }

    /// `E^[phi] = -E~[-phi]`.
    pub fn lower<P: PathPayoff + ?Sized>(&self, model: &SequenceModel, payoff: &P) -> Result<f64> {
        Ok(-self.upper(model, &Negated(payoff))?)
    }

    pub fn pair<P: PathPayoff + ?Sized>(&self, model: &SequenceModel, payoff: &P) -> Result<ExpectationPair> {
        Ok(ExpectationPair { lower: self.lower(model, payoff)?, upper: self.upper(model, payoff)? })
    }

    /// Upper value together with the maximising measure at every state.
    pub fn optimal_policy<P: PathPayoff + ?Sized>(&self, model: &SequenceModel, payoff: &P) -> Result<(f64, Policy)> {
        let (v, p) = self.run(model, payoff, true)?;
        Ok((v, p.expect("policy requested")))
    }

    fn run<P: PathPayoff + ?Sized>(
        &self,
        model: &SequenceModel,
        payoff: &P,
        keep_policy: bool,
    ) -> Result<(f64, Option<Policy>)> {
        let aux = payoff.aux_count();
        let layers = Layers::of(model);
        self.check(&layers, aux)?;
        let settled: Vec<Option<f64>> = (0..aux).map(|a| payoff.settled(a)).collect();
        let n = model.horizon();

        let mut next = vec![0.0f64; layers.width(n) * aux];
        let lo_n = layers.lo[n];
        par::fill(&mut next, self.parallel, |i| {
            let a = i % aux;
            settled[a].unwrap_or_else(|| payoff.terminal(lo_n + (i / aux) as i64, a))
        });

        let mut choice = Vec::new();
        for k in (1..=n).rev() {
            let step = model.step(k - 1);
            let points = step.support().points();
            let measures = step.sparse_measures();
            let (lo_prev, lo_next) = (layers.lo[k - 1], layers.lo[k]);
            let next_ref = &next;
            let child = |s: i64, a: usize, j: usize| -> f64 {
                let t = s + points[j];
                let b = payoff.advance(k, a, points[j], t);
                next_ref[(t - lo_next) as usize * aux + b]
            };
            let size = layers.width(k - 1) * aux;
            if keep_policy {
                let mut cur = vec![(0.0f64, 0u16); size];
                par::fill(&mut cur, self.parallel, |i| {
                    let a = i % aux;
                    if let Some(v) = settled[a] {
                        return (v, 0);
                    }
                    best_measure(measures, |j| child(lo_prev + (i / aux) as i64, a, j))
                });
                choice.push(cur.iter().map(|&(_, m)| m).collect::<Vec<_>>());
                next = cur.into_iter().map(|(v, _)| v).collect();
            } else {
                let mut cur = vec![0.0f64; size];
                par::fill(&mut cur, self.parallel, |i| {
                    let a = i % aux;
                    if let Some(v) = settled[a] {
                        return v;
                    }
                    best_measure(measures, |j| child(lo_prev + (i / aux) as i64, a, j)).0
                });
                next = cur;
            }
        }
        let value = next[payoff.initial_aux()];
        let policy = keep_policy.then(|| {
            choice.reverse();
            Policy { layers, aux, choice }
        });
        Ok((value, policy))
    }
}

/// Largest `sum_j p(j) * value(j)` over the measures; the first maximiser wins.
#[inline]
fn best_measure(measures: &[Vec<(usize, f64)>], value: impl Fn(usize) -> f64) -> (f64, u16) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0u16;
    for (m, entries) in measures.iter().enumerate() {
        let mut acc = 0.0;
        for &(j, p) in entries {
            acc += p * value(j);
        }
        if acc > best {
            best = acc;
            arg = m as u16;
        }
    }
    (best, arg)
}

/// Values of `E~[(-c) v phi(X) ^ c]` along an increasing schedule of `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BreveExpectation {
    pub value: f64,
    pub values: Vec<f64>,
    /// Index into the schedule from which the values stay constant, reported
    /// only when the last level already covers `max |phi|` on the support.
    pub stabilized_at: Option<usize>,
}

pub fn breve_expectation(
    step: &StepAmbiguity,
    payoff: impl Fn(f64) -> f64,
    schedule: &[f64],
) -> Result<BreveExpectation> {
    if schedule.is_empty() {
        return Err(invalid("truncation schedule is empty"));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("truncation schedule must be strictly increasing"));
    }
    let raw: Vec<f64> = step.support().values().map(payoff).collect();
    let bound = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let values = schedule
        .iter()
        .map(|&c| {
            let spec = TruncationSpec::new(c)?;
            let clipped: Vec<f64> = raw.iter().map(|&v| crate::model::clamp(v, spec)).collect();
            Ok(step.upper_of_values(&clipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = *values.last().unwrap();
    let stabilized_at =
        (*schedule.last().unwrap() >= bound).then(|| values.iter().rposition(|&v| v != last).map_or(0, |i| i + 1));
    Ok(BreveExpectation { value: last, values, stabilized_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_rademacher_interval;

    fn theta12(n: usize) -> SequenceModel {
        SequenceModel::iid(make_rademacher_interval(1.0, 2.0, 2).unwrap(), n).unwrap()
    }

    #[test]
    fn square_of_one_step() {
        let m = theta12(1);
        let sq = TerminalSum::new(m.delta(), |s| s * s);
        assert_eq!(Engine::default().upper(&m, &sq).unwrap(), 4.0);
        assert_eq!(Engine::default().lower(&m, &sq).unwrap(), 1.0);
        let id = TerminalSum::new(m.delta(), |s| s);
        assert_eq!(Engine::default().pair(&m, &id).unwrap(), ExpectationPair { lower: 0.0, upper: 0.0 });
    }

    #[test]
    fn square_of_two_steps() {
        let m = theta12(2);
        let sq = TerminalSum::new(m.delta(), |s| s * s);
        let pair = Engine::default().pair(&m, &sq).unwrap();
        assert_eq!(pair, ExpectationPair { lower: 2.0, upper: 8.0 });
    }

    #[test]
    fn constants_are_preserved() {
        let m = theta12(4);
        let five = TerminalSum::new(m.delta(), |_| 5.0);
        assert_eq!(Engine::default().pair(&m, &five).unwrap(), ExpectationPair { lower: 5.0, upper: 5.0 });
    }

    #[test]
    fn state_cap_is_enforced() {
        let m = theta12(100);
        let sq = TerminalSum::new(m.delta(), |s| s * s);
        let err = Engine::with_cap(1000).upper(&m, &sq).unwrap_err();
        match err {
            Error::ResourceCap { cap, estimated } => {
                assert_eq!(cap, 1000);
                assert!(estimated > 1000);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn policy_prefers_wide_steps_for_squares() {
        let m = theta12(3);
        let sq = TerminalSum::new(m.delta(), |s| s * s);
        let (v, policy) = Engine::default().optimal_policy(&m, &sq).unwrap();
        assert_eq!(v, 12.0);
        assert_eq!(policy.choose(1, 0, 0), 1);
        assert_eq!(policy.choose(3, -3, 0), 1);
    }

    #[test]
    fn ties_go_to_the_first_measure() {
        let m = theta12(1);
        let id = TerminalSum::new(m.delta(), |s| s);
        let (_, policy) = Engine::default().optimal_policy(&m, &id).unwrap();
        assert_eq!(policy.choose(1, 0, 0), 0);
    }

    #[test]
    fn breve_examples() {
        let step = make_rademacher_interval(1.0, 2.0, 2).unwrap();
        let b = breve_expectation(&step, |x| x, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!((b.value, b.stabilized_at), (0.0, Some(0)));
        let b = breve_expectation(&step, |x| x * x, &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!((b.value, b.stabilized_at), (4.0, Some(2)));
        let b = breve_expectation(&step, |x| x * x, &[1.0]).unwrap();
        assert_eq!((b.value, b.stabilized_at), (1.0, None));
        assert!(breve_expectation(&step, |x| x, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let m = SequenceModel::iid(make_rademacher_interval(1.0, 2.0, 3).unwrap(), 200).unwrap();
        let f = TerminalSum::new(m.delta(), |s: f64| (0.37 * s).sin() + (s / 7.0).powi(2));
        let seq = Engine::sequential().upper(&m, &f).unwrap();
        let par = Engine { parallel: true, ..Engine::default() }.upper(&m, &f).unwrap();
        assert_eq!(seq.to_bits(), par.to_bits());
    }
}
