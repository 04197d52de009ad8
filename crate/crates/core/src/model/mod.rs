//! Finite representation of sub-linear uncertainty.
//!
//! Every coordinate lives on one lattice `{k * delta : k in Z}`. A step carries
//! a finite family of probability vectors over a sorted set of lattice points;
//! each vector is one linear expectation in the family whose supremum is the
//! sub-linear expectation. Interval families (such as a variance interval) are
//! represented by grids that include both endpoints; the toolkit never assumes
//! extreme points suffice.
//!
//! On a finite lattice every real function of the coordinates extends to a
//! locally Lipschitz function, so payoffs are arbitrary functions, indicators
//! included.

mod file;
pub mod random;

pub use file::{ModelFile, StepFile};

use crate::error::{invalid, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Relative tolerance used when deciding that a real value sits on the lattice.
pub const LATTICE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSupport {
    delta: f64,
    points: Vec<i64>,
}

impl LatticeSupport {
    pub fn new(delta: f64, points: Vec<i64>) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid(format!("lattice spacing must be positive, got {delta}")));
        }
        if points.is_empty() {
            return Err(invalid("lattice support needs at least one point"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("lattice points must be strictly increasing"));
        }
        Ok(Self { delta, points })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Lattice indices of the support points.
    pub fn points(&self) -> &[i64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_index(&self) -> i64 {
        self.points[0]
    }

    pub fn max_index(&self) -> i64 {
        self.points[self.points.len() - 1]
    }

    /// Real value of the `j`-th point.
    pub fn value(&self, j: usize) -> f64 {
        self.points[j] as f64 * self.delta
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(move |&k| k as f64 * self.delta)
    }

    /// Largest `|x|` over the support.
    pub fn radius(&self) -> f64 {
        self.min_index().abs().max(self.max_index().abs()) as f64 * self.delta
    }
}

/// Nonzero entries of a probability vector, in support order.
pub type SparseMeasure = Vec<(usize, f64)>;

/// One time step's uncertainty: a support plus a finite family of laws on it.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAmbiguity {
    support: LatticeSupport,
    measures: Vec<Vec<f64>>,
    sparse: Vec<SparseMeasure>,
}

impl StepAmbiguity {
    pub fn new(support: LatticeSupport, measures: Vec<Vec<f64>>) -> Result<Self> {
        if measures.is_empty() {
            return Err(invalid("a step needs at least one measure"));
        }
        for (i, m) in measures.iter().enumerate() {
            if m.len() != support.len() {
                return Err(invalid(format!(
                    "measure {i} has {} entries but the support has {} points",
                    m.len(),
                    support.len()
                )));
            }
            if let Some(bad) = m.iter().find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p))) {
                return Err(invalid(format!("measure {i} has entry {bad} outside [0, 1]")));
            }
            let total: f64 = m.iter().sum();
            if (total - 1.0).abs() > MASS_TOLERANCE {
                return Err(invalid(format!("measure {i} sums to {total}, not 1")));
            }
        }
        let sparse = measures
            .iter()
            .map(|m| m.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, &p)| (j, p)).collect())
            .collect();
        Ok(Self { support, measures, sparse })
    }

    /// Deterministic variable: all mass on one lattice point.
    pub fn point_mass(delta: f64, index: i64) -> Result<Self> {
        Self::new(LatticeSupport::new(delta, vec![index])?, vec![vec![1.0]])
    }

    pub fn support(&self) -> &LatticeSupport {
        &self.support
    }

    pub fn delta(&self) -> f64 {
        self.support.delta
    }

    pub fn measures(&self) -> &[Vec<f64>] {
        &self.measures
    }

    pub fn measure_count(&self) -> usize {
        self.measures.len()
    }

    /// Nonzero `(point, mass)` pairs per measure, in support order. All
    /// weighted sums in the crate run over these lists left to right.
    pub fn sparse_measures(&self) -> &[SparseMeasure] {
        &self.sparse
    }

    /// `max_theta E_theta[f(X)]`.
    pub fn upper(&self, f: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = self.support.values().map(f).collect();
        self.upper_of_values(&vals)
    }

    /// `-upper(-f)`.
    pub fn lower(&self, f: impl Fn(f64) -> f64) -> f64 {
        -self.upper(|x| -f(x))
    }

    /// Upper expectation of a function given by its values on the support.
    pub fn upper_of_values(&self, vals: &[f64]) -> f64 {
        debug_assert_eq!(vals.len(), self.support.len());
        let mut best = f64::NEG_INFINITY;
        for m in &self.sparse {
            let mut acc = 0.0;
            for &(j, p) in m {
                acc += p * vals[j];
            }
            if acc > best {
                best = acc;
            }
        }
        best
    }

    /// Upper probability of `{X in A}` for a predicate on the real value.
    pub fn upper_prob(&self, pred: impl Fn(f64) -> bool) -> f64 {
        self.upper(|x| if pred(x) { 1.0 } else { 0.0 }).min(1.0)
    }

    /// Upper mean `E~[X]`.
    pub fn upper_mean(&self) -> f64 {
        self.upper(|x| x)
    }

    /// Lower mean `E^[X] = -E~[-X]`.
    pub fn lower_mean(&self) -> f64 {
        self.lower(|x| x)
    }

    /// Is the step centred from both sides, `E~[X] = E^[X] = 0` within `tol`?
    pub fn is_centered(&self, tol: f64) -> bool {
        self.upper_mean().abs() <= tol && self.lower_mean().abs() <= tol
    }
}

/// How the steps of a sequence are scheduled.
#[derive(Debug, Clone, PartialEq)]
pub enum Steps {
    Iid(StepAmbiguity),
    Explicit(Vec<StepAmbiguity>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModel {
    horizon: usize,
    steps: Steps,
}

impl SequenceModel {
    pub fn iid(step: StepAmbiguity, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        Ok(Self { horizon, steps: Steps::Iid(step) })
    }

    pub fn explicit(steps: Vec<StepAmbiguity>) -> Result<Self> {
        if steps.is_empty() {
            return Err(invalid("horizon must be positive"));
        }
        let delta = steps[0].delta();
        for (i, s) in steps.iter().enumerate() {
            if !same_spacing(s.delta(), delta) {
                return Err(invalid(format!(
                    "step {} uses lattice spacing {} but step 1 uses {delta}",
                    i + 1,
                    s.delta()
                )));
            }
        }
        Ok(Self { horizon: steps.len(), steps: Steps::Explicit(steps) })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn steps(&self) -> &Steps {
        &self.steps
    }

    /// Step for coordinate `i` (0-based).
    pub fn step(&self, i: usize) -> &StepAmbiguity {
        assert!(i < self.horizon, "step index {i} outside horizon {}", self.horizon);
        match &self.steps {
            Steps::Iid(s) => s,
            Steps::Explicit(v) => &v[i],
        }
    }

    pub fn delta(&self) -> f64 {
        self.step(0).delta()
    }

    pub fn is_iid(&self) -> bool {
        matches!(self.steps, Steps::Iid(_))
    }

    /// Same schedule cut (or extended, for i.i.d. models) to a new horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        match &self.steps {
            Steps::Iid(s) => Self::iid(s.clone(), horizon),
            Steps::Explicit(v) => {
                if horizon > v.len() {
                    return Err(invalid(format!("explicit model has {} steps, cannot extend to {horizon}", v.len())));
                }
                Self::explicit(v[..horizon].to_vec())
            }
        }
    }

    /// Does every step carry exactly one measure (the classical case)?
    pub fn is_linear(&self) -> bool {
        (0..self.horizon).all(|i| self.step(i).measure_count() == 1)
    }
}

fn same_spacing(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    c: f64,
}

impl TruncationSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("truncation level must be positive, got {c}")));
        }
        Ok(Self { c })
    }

    pub fn level(&self) -> f64 {
        self.c
    }
}

/// `(-c) v x ^ c`.
pub fn clamp(x: f64, spec: TruncationSpec) -> f64 {
    x.max(-spec.c).min(spec.c)
}

/// Result of mapping real values onto a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFit {
    pub delta: f64,
    pub indices: Vec<i64>,
    /// Largest `|k * delta - v|` over the fitted values.
    pub max_snap: f64,
}

/// Find a spacing `delta` such that every value is (within tolerance) an
/// integer multiple of it. Candidates are `base / q` for `q = 1..=max_divisor`
/// where `base` is the smallest nonzero magnitude or gap among the values.
pub fn fit_lattice(values: &[f64], max_divisor: u32) -> Result<LatticeFit> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("cannot place non-finite values on a lattice"));
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(LatticeFit { delta: 1.0, indices: vec![0; values.len()], max_snap: 0.0 });
    }
    let tol = LATTICE_TOLERANCE * scale.max(1.0);
    let mut base = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        if a.abs() > tol {
            base = base.min(a.abs());
        }
        for b in &values[i + 1..] {
            let gap = (a - b).abs();
            if gap > tol {
                base = base.min(gap);
            }
        }
    }
    let mut best: Option<LatticeFit> = None;
    for q in 1..=max_divisor.max(1) {
        let delta = base / q as f64;
        let indices: Vec<i64> = values.iter().map(|v| (v / delta).round() as i64).collect();
        let max_snap = values.iter().zip(&indices).fold(0.0f64, |m, (v, &k)| m.max((k as f64 * delta - v).abs()));
        let fit = LatticeFit { delta, indices, max_snap };
        if max_snap <= tol {
            return Ok(fit);
        }
        if best.as_ref().is_none_or(|b| fit.max_snap < b.max_snap) {
            best = Some(fit);
        }
    }
    let best = best.expect("at least one candidate spacing");
    Err(invalid(format!(
        "values are not representable on a common lattice: best spacing {} leaves a snap error of {}",
        best.delta, best.max_snap
    )))
}

/// Symmetric two-point laws `X = +-theta` (mass 1/2 each) for `theta` on an
/// arithmetic grid of `grid` points from `sigma_lo` to `sigma_hi`.
///
/// The lattice spacing is the coarsest `sigma_lo / q` on which every `+-theta`
/// lands exactly (to relative `1e-9`); if none exists for `q <= 10_000` the
/// call fails with the best snap error found.
pub fn make_rademacher_interval(sigma_lo: f64, sigma_hi: f64, grid: usize) -> Result<StepAmbiguity> {
    if !(sigma_lo.is_finite() && sigma_hi.is_finite() && sigma_lo > 0.0 && sigma_lo <= sigma_hi) {
        return Err(invalid(format!("need 0 < sigma_lo <= sigma_hi, got sigma_lo={sigma_lo}, sigma_hi={sigma_hi}")));
    }
    if grid == 0 {
        return Err(invalid("grid must have at least one point"));
    }
    if grid == 1 && sigma_lo != sigma_hi {
        return Err(invalid(format!("a one-point grid needs sigma_lo = sigma_hi, got {sigma_lo} and {sigma_hi}")));
    }
    let thetas: Vec<f64> = (0..grid)
        .map(|j| {
            if j == 0 {
                sigma_lo
            } else if j == grid - 1 {
                sigma_hi
            } else {
                sigma_lo + (sigma_hi - sigma_lo) * j as f64 / (grid - 1) as f64
            }
        })
        .collect();
    let fit = fit_lattice(&thetas, 10_000)?;
    let mut points: Vec<i64> = fit.indices.iter().flat_map(|&k| [-k, k]).collect();
    points.sort_unstable();
    points.dedup();
    let measures = fit
        .indices
        .iter()
        .map(|&k| {
            let mut m = vec![0.0; points.len()];
            if k == 0 {
                m[points.binary_search(&0).unwrap()] = 1.0;
            } else {
                m[points.binary_search(&-k).unwrap()] = 0.5;
                m[points.binary_search(&k).unwrap()] = 0.5;
            }
            m
        })
        .collect();
    StepAmbiguity::new(LatticeSupport::new(fit.delta, points)?, measures)
}

/// A truncated step together with the distance `c` had to move to land on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated {
    pub step: StepAmbiguity,
    pub snap_distance: f64,
}

/// Push `x -> (-c) v x ^ c` through the step: points beyond `+-c` move to the
/// boundary and their masses merge there.
pub fn truncate_step(step: &StepAmbiguity, spec: TruncationSpec) -> Truncated {
    let delta = step.delta();
    let kc = (spec.c / delta).round() as i64;
    let snap_distance = (kc as f64 * delta - spec.c).abs();
    let old = step.support.points();
    let mut points: Vec<i64> = old.iter().map(|&k| k.clamp(-kc, kc)).collect();
    points.dedup();
    let target: Vec<usize> = old.iter().map(|&k| points.binary_search(&k.clamp(-kc, kc)).unwrap()).collect();
    let measures = step
        .measures
        .iter()
        .map(|m| {
            let mut out = vec![0.0; points.len()];
            for (j, &p) in m.iter().enumerate() {
                out[target[j]] += p;
            }
            merged(out)
        })
        .collect();
    let support = LatticeSupport::new(delta, points).expect("clipping keeps points ordered");
    let step = StepAmbiguity::new(support, measures).expect("clipping preserves mass");
    Truncated { step, snap_distance }
}

/// Merged masses can round just above one.
fn merged(mut m: Vec<f64>) -> Vec<f64> {
    m.iter_mut().for_each(|p| *p = p.min(1.0));
    m
}

/// Law of `phi(X)` under each measure, on a lattice fitted to the values of `phi`.
pub fn push_forward(step: &StepAmbiguity, phi: impl Fn(f64) -> f64) -> Result<StepAmbiguity> {
    let vals: Vec<f64> = step.support.values().map(phi).collect();
    let fit = fit_lattice(&vals, 10_000)?;
    let mut points = fit.indices.clone();
    points.sort_unstable();
    points.dedup();
    let measures = step
        .measures
        .iter()
        .map(|m| {
            let mut out = vec![0.0; points.len()];
            for (j, &p) in m.iter().enumerate() {
                out[points.binary_search(&fit.indices[j]).unwrap()] += p;
            }
            merged(out)
        })
        .collect();
    StepAmbiguity::new(LatticeSupport::new(fit.delta, points)?, measures)
}
