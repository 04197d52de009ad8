//! Upper and lower capacities of path events.
//!
//! On a finite lattice the indicator of an event is itself an admissible test
//! function, so the upper capacity is `V(A) = E~[1_A]` and the lower capacity is
//! `v(A) = 1 - V(A^c)`. Countable covers reduce to finite ones, so this single
//! pair stands in for every outer-capacity extension of the continuous theory.
//! Events are deterministic automata over `(step, partial sum)`; complements
//! are built by flipping acceptance.

pub mod mc;
pub mod spec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expectation::{Engine, PathPayoff};
use crate::model::random::{random_model, RandomModelSpec};
use crate::model::{SequenceModel, LATTICE_TOLERANCE};
use crate::rng::SplitMix64;

pub trait PathAutomaton: Sync {
    fn state_count(&self) -> usize;

    fn initial(&self) -> usize {
        0
    }

    /// State after step `step` (1-based) moved the sum by `x` to `sum`.
    fn advance(&self, step: usize, state: usize, x: i64, sum: i64) -> usize;

    fn accepts(&self, sum: i64, state: usize) -> bool;

    /// `Some(verdict)` when every continuation from `state` ends with that verdict.
    fn decided(&self, _state: usize) -> Option<bool> {
        None
    }
}

impl<A: PathAutomaton + ?Sized> PathAutomaton for &A {
    fn state_count(&self) -> usize {
        (**self).state_count()
    }
    fn initial(&self) -> usize {
        (**self).initial()
    }
    fn advance(&self, step: usize, state: usize, x: i64, sum: i64) -> usize {
        (**self).advance(step, state, x, sum)
    }
    fn accepts(&self, sum: i64, state: usize) -> bool {
        (**self).accepts(sum, state)
    }
    fn decided(&self, state: usize) -> Option<bool> {
        (**self).decided(state)
    }
}

/// The indicator `1_A` as a payoff.
pub struct Indicator<A>(pub A);

impl<A: PathAutomaton> PathPayoff for Indicator<A> {
    fn aux_count(&self) -> usize {
        self.0.state_count()
    }
    fn initial_aux(&self) -> usize {
        self.0.initial()
    }
    fn advance(&self, step: usize, aux: usize, x: i64, sum: i64) -> usize {
        self.0.advance(step, aux, x, sum)
    }
    fn terminal(&self, sum: i64, aux: usize) -> f64 {
        if self.0.accepts(sum, aux) {
            1.0
        } else {
            0.0
        }
    }
    fn settled(&self, aux: usize) -> Option<f64> {
        self.0.decided(aux).map(|b| if b { 1.0 } else { 0.0 })
    }
}

/// `A^c`.
pub struct Complement<A>(pub A);

impl<A: PathAutomaton> PathAutomaton for Complement<A> {
    fn state_count(&self) -> usize {
        self.0.state_count()
    }
    fn initial(&self) -> usize {
        self.0.initial()
    }
    fn advance(&self, step: usize, state: usize, x: i64, sum: i64) -> usize {
        self.0.advance(step, state, x, sum)
    }
    fn accepts(&self, sum: i64, state: usize) -> bool {
        !self.0.accepts(sum, state)
    }
    fn decided(&self, state: usize) -> Option<bool> {
        self.0.decided(state).map(|b| !b)
    }
}

/// Product automaton accepting when `combine(a, b)` holds.
struct Product<A, B> {
    a: A,
    b: B,
    union: bool,
}

impl<A: PathAutomaton, B: PathAutomaton> Product<A, B> {
    fn split(&self, s: usize) -> (usize, usize) {
        let m = self.b.state_count();
        (s / m, s % m)
    }

    fn combine(&self, x: bool, y: bool) -> bool {
        if self.union {
            x || y
        } else {
            x && y
        }
    }
}

impl<A: PathAutomaton, B: PathAutomaton> PathAutomaton for Product<A, B> {
    fn state_count(&self) -> usize {
        self.a.state_count() * self.b.state_count()
    }
    fn initial(&self) -> usize {
        self.a.initial() * self.b.state_count() + self.b.initial()
    }
    fn advance(&self, step: usize, state: usize, x: i64, sum: i64) -> usize {
        let (p, q) = self.split(state);
        self.a.advance(step, p, x, sum) * self.b.state_count() + self.b.advance(step, q, x, sum)
    }
    fn accepts(&self, sum: i64, state: usize) -> bool {
        let (p, q) = self.split(state);
        self.combine(self.a.accepts(sum, p), self.b.accepts(sum, q))
    }
    fn decided(&self, state: usize) -> Option<bool> {
        let (p, q) = self.split(state);
        // Absorbing value of the combination: a decisive side settles it alone.
        match (self.a.decided(p), self.b.decided(q)) {
            (Some(x), _) | (_, Some(x)) if x == self.union => Some(x),
            (Some(x), Some(y)) => Some(self.combine(x, y)),
            _ => None,
        }
    }
}

/// `A ∪ B`.
pub fn union<A: PathAutomaton, B: PathAutomaton>(a: A, b: B) -> impl PathAutomaton {
    Product { a, b, union: true }
}

/// `A ∩ B`.
pub fn intersection<A: PathAutomaton, B: PathAutomaton>(a: A, b: B) -> impl PathAutomaton {
    Product { a, b, union: false }
}

/// The empty event or the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constant(pub bool);

impl PathAutomaton for Constant {
    fn state_count(&self) -> usize {
        1
    }
    fn advance(&self, _: usize, _: usize, _: i64, _: i64) -> usize {
        0
    }
    fn accepts(&self, _: i64, _: usize) -> bool {
        self.0
    }
    fn decided(&self, _: usize) -> Option<bool> {
        Some(self.0)
    }
}

/// Event `{S_N in [lo, hi]}` on lattice indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TerminalRange {
    pub lo: i64,
    pub hi: i64,
}

impl PathAutomaton for TerminalRange {
    fn state_count(&self) -> usize {
        1
    }
    fn advance(&self, _: usize, _: usize, _: i64, _: i64) -> usize {
        0
    }
    fn accepts(&self, sum: i64, _: usize) -> bool {
        (self.lo..=self.hi).contains(&sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
}

/// Which transform of the partial sum a window event watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stat {
    #[serde(rename = "S")]
    Sum,
    #[serde(rename = "-S")]
    NegSum,
    #[serde(rename = "absS")]
    AbsSum,
}

impl Stat {
    pub fn apply(self, sum: i64) -> i64 {
        match self {
            Stat::Sum => sum,
            Stat::NegSum => -sum,
            Stat::AbsSum => sum.abs(),
        }
    }
}

/// A comparison `value side threshold` restated on lattice indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeTest {
    Never,
    Always,
    AtLeast(i64),
    AtMost(i64),
}

impl LatticeTest {
    /// Compare `k * delta` against a real threshold; values within
    /// `1e-9` of a lattice point are treated as lying on it.
    pub fn new(threshold: f64, side: Side, delta: f64) -> Self {
        if threshold.is_nan() {
            return LatticeTest::Never;
        }
        if threshold.is_infinite() {
            let up = threshold > 0.0;
            return match (side, up) {
                (Side::Ge | Side::Gt, true) | (Side::Le | Side::Lt, false) => LatticeTest::Never,
                _ => LatticeTest::Always,
            };
        }
        let q = threshold / delta;
        let tol = LATTICE_TOLERANCE * q.abs().max(1.0);
        let bound = |v: f64| -> Option<i64> { (v.abs() < 9.0e18).then_some(v as i64) };
        let test = match side {
            Side::Ge => bound((q - tol).ceil()).map(LatticeTest::AtLeast),
            Side::Gt => bound((q + tol).floor() + 1.0).map(LatticeTest::AtLeast),
            Side::Le => bound((q + tol).floor()).map(LatticeTest::AtMost),
            Side::Lt => bound((q - tol).ceil() - 1.0).map(LatticeTest::AtMost),
        };
        test.unwrap_or(match (side, q > 0.0) {
            (Side::Ge | Side::Gt, true) | (Side::Le | Side::Lt, false) => LatticeTest::Never,
            _ => LatticeTest::Always,
        })
    }

    pub fn holds(self, k: i64) -> bool {
        match self {
            LatticeTest::Never => false,
            LatticeTest::Always => true,
            LatticeTest::AtLeast(b) => k >= b,
            LatticeTest::AtMost(b) => k <= b,
        }
    }
}

/// `{ exists m in [n, N] : stat(S_m) side threshold(m) }`.
///
/// States: 0 still watching, 1 triggered, 2 window closed without trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMaxEvent {
    start: usize,
    end: usize,
    stat: Stat,
    tests: Vec<LatticeTest>,
}

const WATCHING: usize = 0;
const TRIGGERED: usize = 1;
const CLOSED: usize = 2;

impl WindowMaxEvent {
    pub fn window(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn stat(&self) -> Stat {
        self.stat
    }

    pub fn test(&self, m: usize) -> LatticeTest {
        self.tests[m - self.start]
    }
}

impl PathAutomaton for WindowMaxEvent {
    fn state_count(&self) -> usize {
        3
    }
    fn advance(&self, step: usize, state: usize, _x: i64, sum: i64) -> usize {
        if state != WATCHING || step < self.start {
            return state;
        }
        // Unreachable in practice, but the DP fills every (sum, state) pair.
        if step > self.end {
            return CLOSED;
        }
        if self.tests[step - self.start].holds(self.stat.apply(sum)) {
            TRIGGERED
        } else if step >= self.end {
            CLOSED
        } else {
            WATCHING
        }
    }
    fn accepts(&self, _sum: i64, state: usize) -> bool {
        state == TRIGGERED
    }
    fn decided(&self, state: usize) -> Option<bool> {
        match state {
            TRIGGERED => Some(true),
            CLOSED => Some(false),
            _ => None,
        }
    }
}

/// Build the window event `{max over n <= m <= N of stat(S_m) compared with threshold(m)}`.
pub fn window_max_event(
    model: &SequenceModel,
    n: usize,
    end: usize,
    threshold: impl Fn(usize) -> f64,
    side: Side,
    stat: Stat,
) -> Result<WindowMaxEvent> {
    if n < 1 || n > end || end > model.horizon() {
        return Err(invalid(format!("window [{n}, {end}] must satisfy 1 <= n <= N <= horizon {}", model.horizon())));
    }
    let delta = model.delta();
    let tests = (n..=end).map(|m| LatticeTest::new(threshold(m), side, delta)).collect();
    Ok(WindowMaxEvent { start: n, end, stat, tests })
}

/// One threshold predicate on a single coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEvent {
    Never,
    Threshold { side: Side, value: f64 },
}

/// `{ some i with X_i in A_i }`. States: 0 none so far, 1 hit.
#[derive(Debug, Clone, PartialEq)]
pub struct AnyStepEvent {
    tests: Vec<LatticeTest>,
}

impl AnyStepEvent {
    pub fn new(model: &SequenceModel, events: &[StepEvent]) -> Result<Self> {
        if events.len() > model.horizon() {
            return Err(invalid(format!("{} step events for a horizon of {}", events.len(), model.horizon())));
        }
        let delta = model.delta();
        let tests = events
            .iter()
            .map(|e| match *e {
                StepEvent::Never => LatticeTest::Never,
                StepEvent::Threshold { side, value } => LatticeTest::new(value, side, delta),
            })
            .collect();
        Ok(Self { tests })
    }
}

impl PathAutomaton for AnyStepEvent {
    fn state_count(&self) -> usize {
        2
    }
    fn advance(&self, step: usize, state: usize, x: i64, _sum: i64) -> usize {
        if state == 1 {
            return 1;
        }
        match self.tests.get(step - 1) {
            Some(t) if t.holds(x) => 1,
            _ => 0,
        }
    }
    fn accepts(&self, _sum: i64, state: usize) -> bool {
        state == 1
    }
    fn decided(&self, state: usize) -> Option<bool> {
        (state == 1).then_some(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityPair {
    pub lower: f64,
    pub upper: f64,
}

/// `V(A) = E~[1_A]`, clamped to `[0, 1]` against rounding.
pub fn upper_capacity<A: PathAutomaton + ?Sized>(engine: &Engine, model: &SequenceModel, event: &A) -> Result<f64> {
    Ok(engine.upper(model, &Indicator(event))?.clamp(0.0, 1.0))
}

/// `v(A) = 1 - V(A^c)`.
pub fn lower_capacity<A: PathAutomaton + ?Sized>(engine: &Engine, model: &SequenceModel, event: &A) -> Result<f64> {
    Ok((1.0 - upper_capacity(engine, model, &Complement(event))?).clamp(0.0, 1.0))
}

pub fn capacity_pair<A: PathAutomaton + ?Sized>(
    engine: &Engine,
    model: &SequenceModel,
    event: &A,
) -> Result<CapacityPair> {
    Ok(CapacityPair { lower: lower_capacity(engine, model, event)?, upper: upper_capacity(engine, model, event)? })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Quadrature {
    /// The variable only takes the listed values; the tail is a step function.
    Exact {
        atoms: Vec<f64>,
    },
    Trapezoid {
        step: f64,
    },
}

/// Choquet integral `int_0^inf V(X >= t) dt + int_{-inf}^0 (V(X >= t) - 1) dt`
/// for a variable supported in `[lower, upper]`.
pub fn choquet_integral(tail: impl Fn(f64) -> f64, lower: f64, upper: f64, quadrature: &Quadrature) -> Result<f64> {
    if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
        return Err(invalid(format!("integration range [{lower}, {upper}] is not a finite interval")));
    }
    let mut knots = vec![lower, upper, 0.0f64.clamp(lower, upper)];
    match quadrature {
        Quadrature::Exact { atoms } => {
            if let Some(a) = atoms.iter().find(|a| !(lower..=upper).contains(*a)) {
                return Err(invalid(format!("atom {a} lies outside [{lower}, {upper}]")));
            }
            knots.extend(atoms);
        }
        Quadrature::Trapezoid { step } => {
            if !(step.is_finite() && *step > 0.0) {
                return Err(invalid(format!("quadrature step must be positive, got {step}")));
            }
            let count = ((upper - lower) / step).ceil() as usize;
            knots.extend((1..count).map(|i| lower + i as f64 * step));
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let values: Vec<f64> = knots.iter().map(|&t| tail(t)).collect();
    for (w, t) in values.windows(2).zip(&knots[1..]) {
        if w[1] > w[0] + 1e-12 {
            return Err(invalid(format!("tail capacity increases near t = {t}")));
        }
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(invalid(format!("tail capacity value {v} outside [0, 1]")));
    }
    let mut total = 0.0;
    for i in 1..knots.len() {
        let (a, b) = (knots[i - 1], knots[i]);
        let v = match quadrature {
            Quadrature::Exact { .. } => values[i],
            Quadrature::Trapezoid { .. } => 0.5 * (values[i - 1] + values[i]),
        };
        total += if b <= 0.0 { (v - 1.0) * (b - a) } else { v * (b - a) };
    }
    Ok(total)
}

/// Numbers compared by the Borel–Cantelli product identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcCheck {
    /// `v(∩ A_i^c)` from the engine's lower expectation.
    pub exact_lower_of_intersection: f64,
    /// `prod (1 - V(A_i))`.
    pub product_bound: f64,
    /// `exp(-sum V(A_i))`.
    pub exp_bound: f64,
    /// `V(∪ A_i)`.
    pub exact_upper_of_union: f64,
    pub step_capacities: Vec<f64>,
}

pub fn bc_product_check(engine: &Engine, model: &SequenceModel, events: &[StepEvent]) -> Result<BcCheck> {
    let any = AnyStepEvent::new(model, events)?;
    let delta = model.delta();
    let step_capacities: Vec<f64> = events
        .iter()
        .enumerate()
        .map(|(i, e)| match *e {
            StepEvent::Never => 0.0,
            StepEvent::Threshold { side, value } => {
                let test = LatticeTest::new(value, side, delta);
                let step = model.step(i);
                let hits: Vec<f64> =
                    step.support().points().iter().map(|&k| if test.holds(k) { 1.0 } else { 0.0 }).collect();
                step.upper_of_values(&hits).min(1.0)
            }
        })
        .collect();
    let product_bound = step_capacities.iter().fold(1.0, |acc, v| acc * (1.0 - v));
    let exp_bound = (-step_capacities.iter().sum::<f64>()).exp();
    let horizon = model.with_horizon(events.len().max(1))?;
    let none = Complement(&any);
    let exact_lower_of_intersection = engine.lower(&horizon, &Indicator(&none))?.clamp(0.0, 1.0);
    let exact_upper_of_union = upper_capacity(engine, &horizon, &any)?;
    Ok(BcCheck { exact_lower_of_intersection, product_bound, exp_bound, exact_upper_of_union, step_capacities })
}

/// Random model plus one single-coordinate event per step, drawn from
/// `SplitMix64::stream(seed, family_id)`. About one step in five gets no event.
pub fn draw_bc_family(seed: u64, family_id: usize, max_horizon: usize) -> (SequenceModel, Vec<StepEvent>) {
    let mut rng = SplitMix64::stream(seed, family_id as u64);
    let spec = RandomModelSpec { max_horizon: max_horizon.max(1), ..RandomModelSpec::default() };
    let model = random_model(&mut rng, &spec);
    let sides = [Side::Ge, Side::Gt, Side::Le, Side::Lt];
    let events = (0..model.horizon())
        .map(|i| {
            if rng.bernoulli(0.2) {
                return StepEvent::Never;
            }
            let support = model.step(i).support();
            let value = support.value(rng.below(support.len()));
            StepEvent::Threshold { side: sides[rng.below(4)], value }
        })
        .collect();
    (model, events)
}
