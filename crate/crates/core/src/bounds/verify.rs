//! Randomized domination check of the maximal inequalities against exact
//! capacities.
//!
//! For every case a small random model is drawn together with `(x, y, p, delta)`.
//! The left-hand sides are exact capacities of the window event
//! `{max_{k<=n} (S_k - c_k) >= x}` with centring `c_k = E~[S_k]` or `E^[S_k]`:
//!
//! - `lhs = V(max (S_k - E~[S_k]) >= x)`
//! - `lhs_lower = v(max (S_k - E~[S_k]) >= x)`
//! - `lhs_lower_centered = v(max (S_k - E^[S_k]) >= x)`
//!
//! `lhs` and `lhs_lower_centered` must not exceed the Kolmogorov and
//! Fuk–Nagaev bounds built on `B^2_{n,y}`; `lhs_lower` must not exceed the
//! ones built on `b^2_{n,y}`.

use serde::Serialize;

use super::{fuk_nagaev_terms, kolmogorov_term};
use crate::capacity::{lower_capacity, upper_capacity, window_max_event, AnyStepEvent, Side, Stat, StepEvent};
use crate::error::{invalid, Result};
use crate::expectation::Engine;
use crate::model::random::{random_model, RandomModelSpec};
use crate::model::SequenceModel;
use crate::par;
use crate::rng::SplitMix64;
use crate::table::{num, Table};

/// Slack allowed before a case counts as a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DominationSpec {
    pub models: RandomModelSpec,
    pub p_range: (f64, f64),
}

impl Default for DominationSpec {
    fn default() -> Self {
        Self {
            models: RandomModelSpec { max_horizon: 10, index_range: 4, max_points: 5, ..RandomModelSpec::default() },
            p_range: (2.0, 4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationRow {
    pub case_id: usize,
    pub n: usize,
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub delta: f64,
    pub lhs: f64,
    pub lhs_lower: f64,
    pub lhs_lower_centered: f64,
    pub kolmogorov_upper_var: f64,
    pub fuk_nagaev_upper_var: f64,
    pub kolmogorov_lower_var: f64,
    pub fuk_nagaev_lower_var: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub rows: Vec<DominationRow>,
    /// Case ids with at least one violated inequality.
    pub violations: Vec<usize>,
}

impl DominationReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "case_id",
            "n",
            "x",
            "y",
            "p",
            "delta",
            "lhs",
            "lhs_lower",
            "lhs_lower_centered",
            "kolmogorov_upper_var",
            "fuk_nagaev_upper_var",
            "kolmogorov_lower_var",
            "fuk_nagaev_lower_var",
            "violated",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.case_id.to_string(),
                r.n.to_string(),
                num(r.x),
                num(r.y),
                num(r.p),
                num(r.delta),
                num(r.lhs),
                num(r.lhs_lower),
                num(r.lhs_lower_centered),
                num(r.kolmogorov_upper_var),
                num(r.fuk_nagaev_upper_var),
                num(r.kolmogorov_lower_var),
                num(r.fuk_nagaev_lower_var),
                r.violated.to_string(),
            ]);
        }
        t
    }
}

/// Model and parameters of one case, drawn from `SplitMix64::stream(seed, case_id)`.
pub fn draw_case(spec: &DominationSpec, seed: u64, case_id: usize) -> (SequenceModel, f64, f64, f64, f64) {
    let mut rng = SplitMix64::stream(seed, case_id as u64);
    let model = random_model(&mut rng, &spec.models);
    let radius = (0..model.horizon()).map(|i| model.step(i).support().radius()).fold(0.0, f64::max);
    let span: f64 = (0..model.horizon()).map(|i| model.step(i).support().radius()).sum();
    let scale = radius.max(model.delta());
    let x = rng.uniform(0.02, 1.0) * span.max(model.delta()) * 1.2;
    let y = rng.uniform(0.05, 1.2) * scale;
    let p = rng.uniform(spec.p_range.0, spec.p_range.1);
    let delta = 1.0 - rng.next_f64();
    (model, x, y, p, delta)
}

/// Evaluate one case.
pub fn domination_case(
    engine: &Engine,
    model: &SequenceModel,
    case_id: usize,
    x: f64,
    y: f64,
    p: f64,
    delta: f64,
) -> Result<DominationRow> {
    let n = model.horizon();
    let mut big_b2 = 0.0;
    let mut small_b2 = 0.0;
    let mut a_moment = 0.0;
    let mut upper_means = Vec::with_capacity(n + 1);
    let mut lower_means = Vec::with_capacity(n + 1);
    let (mut up, mut low) = (0.0, 0.0);
    upper_means.push(0.0);
    lower_means.push(0.0);
    for i in 0..n {
        let s = model.step(i);
        big_b2 += s.upper(|v| v.min(y).powi(2));
        small_b2 += s.lower(|v| v.min(y).powi(2));
        a_moment += s.upper(|v| v.max(0.0).min(y).powf(p));
        up += s.upper_mean();
        low += s.lower_mean();
        upper_means.push(up);
        lower_means.push(low);
    }
    let tail_event = AnyStepEvent::new(model, &vec![StepEvent::Threshold { side: Side::Gt, value: y }; n])?;
    let max_tail = upper_capacity(engine, model, &tail_event)?;

    let centred_up = window_max_event(model, 1, n, |k| x + upper_means[k], Side::Ge, Stat::Sum)?;
    let centred_low = window_max_event(model, 1, n, |k| x + lower_means[k], Side::Ge, Stat::Sum)?;
    let lhs = upper_capacity(engine, model, &centred_up)?;
    let lhs_lower = lower_capacity(engine, model, &centred_up)?;
    let lhs_lower_centered = lower_capacity(engine, model, &centred_low)?;

    let kolmogorov_upper_var = max_tail + kolmogorov_term(x, y, big_b2);
    let fuk_nagaev_upper_var = fuk_nagaev_terms(x, y, p, delta, big_b2, a_moment, max_tail);
    let kolmogorov_lower_var = max_tail + kolmogorov_term(x, y, small_b2);
    let fuk_nagaev_lower_var = fuk_nagaev_terms(x, y, p, delta, small_b2, a_moment, max_tail);

    let over = |l: f64, b: f64| l > b + VIOLATION_TOLERANCE;
    let violated = over(lhs, kolmogorov_upper_var)
        || over(lhs, fuk_nagaev_upper_var)
        || over(lhs_lower_centered, kolmogorov_upper_var)
        || over(lhs_lower_centered, fuk_nagaev_upper_var)
        || over(lhs_lower, kolmogorov_lower_var)
        || over(lhs_lower, fuk_nagaev_lower_var);
    Ok(DominationRow {
        case_id,
        n,
        x,
        y,
        p,
        delta,
        lhs,
        lhs_lower,
        lhs_lower_centered,
        kolmogorov_upper_var,
        fuk_nagaev_upper_var,
        kolmogorov_lower_var,
        fuk_nagaev_lower_var,
        violated,
    })
}

/// Run `cases` random cases; case `i` uses stream `(seed, i)` whatever the
/// worker count.
pub fn verify_domination(engine: &Engine, spec: &DominationSpec, cases: usize, seed: u64) -> Result<DominationReport> {
    if cases == 0 {
        return Err(invalid("case count must be at least 1"));
    }
    if !(spec.p_range.0 >= 2.0 && spec.p_range.0 <= spec.p_range.1) {
        return Err(invalid(format!("p range {:?} must lie in [2, inf)", spec.p_range)));
    }
    let inner = Engine { parallel: false, ..*engine };
    let rows = par::map_range(cases, engine.parallel, |i| {
        let (model, x, y, p, delta) = draw_case(spec, seed, i);
        domination_case(&inner, &model, i, x, y, p, delta)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let violations = rows.iter().filter(|r| r.violated).map(|r| r.case_id).collect();
    Ok(DominationReport { rows, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::kolmogorov_bound;
    use crate::model::{make_rademacher_interval, StepAmbiguity};

    #[test]
    fn degenerate_model_has_zero_lhs() {
        let m = SequenceModel::iid(StepAmbiguity::point_mass(1.0, 0).unwrap(), 5).unwrap();
        let row = domination_case(&Engine::default(), &m, 0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert_eq!((row.lhs, row.lhs_lower, row.violated), (0.0, 0.0, false));
    }

    #[test]
    fn worked_case_is_logged() {
        let m = SequenceModel::iid(make_rademacher_interval(1.0, 2.0, 2).unwrap(), 4).unwrap();
        let row = domination_case(&Engine::default(), &m, 0, 1.0, 1.0, 2.0, 1.0).unwrap();
        // B^2_{4,1}: E~[(X ^ 1)^2] = max(1, (4 + 1)/2) = 2.5 per step; max_tail = 1 - (1/2)^4.
        let bound = 1.0 - 0.0625 + kolmogorov_bound(1.0, 1.0, 10.0);
        assert!((row.kolmogorov_upper_var - bound).abs() < 1e-15);
        assert!(row.lhs <= bound);
        assert!(!row.violated);
    }

    #[test]
    fn small_sweep_has_no_violations() {
        let report = verify_domination(&Engine::default(), &DominationSpec::default(), 60, 7).unwrap();
        assert_eq!(report.rows.len(), 60);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn sweep_is_independent_of_parallelism() {
        let spec = DominationSpec::default();
        let a = verify_domination(&Engine::default(), &spec, 20, 3).unwrap();
        let b = verify_domination(&Engine::sequential(), &spec, 20, 3).unwrap();
        assert_eq!(a.table().to_csv(), b.table().to_csv());
    }
}
