//! Report-only probes: cluster-set surrogates, the mean-event continuity
//! mechanism and the lower-capacity converse rate.

use serde::Serialize;

use super::d_n;
use crate::bounds::{rate_rows, ConverseParams};
use crate::capacity::{capacity_pair, window_max_event, Side, Stat};
use crate::error::{invalid, Result};
use crate::expectation::Engine;
use crate::model::{push_forward, SequenceModel, StepAmbiguity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterRow {
    pub sigma: f64,
    /// `V(max_{m<=N} S_m / d_m >= sigma)`.
    pub upper: f64,
    /// `v(max_{m<=N} S_m / d_m >= sigma)`.
    pub lower: f64,
}

/// Finite-window surrogate for the cluster set of `S_n / d_n`: one row per
/// `sigma` with both capacities of `{max_{1<=m<=N} S_m / d_m >= sigma}`.
pub fn cluster_probe(engine: &Engine, step: &StepAmbiguity, end: usize, sigma_grid: &[f64]) -> Result<Vec<ClusterRow>> {
    if !step.is_centered(1e-12) {
        return Err(invalid(format!(
            "cluster probe needs a centred step, got means [{}, {}]",
            step.lower_mean(),
            step.upper_mean()
        )));
    }
    if sigma_grid.iter().any(|s| s.is_nan()) {
        return Err(invalid("sigma grid contains NaN"));
    }
    let model = SequenceModel::iid(step.clone(), end)?;
    sigma_grid
        .iter()
        .map(|&sigma| {
            let event = window_max_event(&model, 1, end, |m| sigma * d_n(m), Side::Ge, Stat::Sum)?;
            let pair = capacity_pair(engine, &model, &event)?;
            Ok(ClusterRow { sigma, upper: pair.upper, lower: pair.lower })
        })
        .collect()
}

/// Capacities of the mean events `A = {S_m/m >= E~[phi] - eps}` and
/// `B = {S_m/m <= E^[phi] + eps}` for `S_m` a sum of `m` i.i.d. copies of `phi(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityRecord {
    pub upper_mean: f64,
    pub lower_mean: f64,
    /// `V(A)`.
    pub upper_of_high_event: f64,
    /// `V(B)`.
    pub upper_of_low_event: f64,
    /// `v(A)`.
    pub lower_of_high_event: f64,
    /// `v(B)`.
    pub lower_of_low_event: f64,
}

pub fn continuity_probe(
    engine: &Engine,
    step: &StepAmbiguity,
    phi: impl Fn(f64) -> f64,
    m: usize,
    eps: f64,
) -> Result<ContinuityRecord> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid(format!("eps must be finite and nonnegative, got {eps}")));
    }
    let pushed = push_forward(step, phi)?;
    let (hi, lo) = (pushed.upper_mean(), pushed.lower_mean());
    let model = SequenceModel::iid(pushed, m)?;
    let mf = m as f64;
    let high = window_max_event(&model, m, m, |_| mf * (hi - eps), Side::Ge, Stat::Sum)?;
    let low = window_max_event(&model, m, m, |_| mf * (lo + eps), Side::Le, Stat::Sum)?;
    let a = capacity_pair(engine, &model, &high)?;
    let b = capacity_pair(engine, &model, &low)?;
    Ok(ContinuityRecord {
        upper_mean: hi,
        lower_mean: lo,
        upper_of_high_event: a.upper,
        upper_of_low_event: b.upper,
        lower_of_high_event: a.lower,
        lower_of_low_event: b.lower,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub n: usize,
    pub x_n: f64,
    /// `s_n` built from lower second moments `E^[X^2]`.
    pub s_lower: f64,
    /// `v(S_n >= z s_lower x_n)`.
    pub capacity: f64,
    /// `x_n^-2 ln capacity`.
    pub lhs: f64,
    /// `-z^2 (1 + gamma) / 2`.
    pub target: f64,
    pub alpha_n: f64,
    pub bounded: bool,
}

/// Rows of `x_n^-2 ln v(S_n >= z s_lower x_n)` next to `-z^2 (1 + gamma) / 2`.
/// Numbers only: no row is read as evidence either way.
pub fn conjecture_probe(
    engine: &Engine,
    family: &dyn Fn(usize) -> Result<SequenceModel>,
    params: &ConverseParams,
    n_list: &[usize],
) -> Result<Vec<ConjectureRow>> {
    Ok(rate_rows(engine, family, params, n_list, true)?
        .into_iter()
        .map(|r| ConjectureRow {
            n: r.n,
            x_n: r.x_n,
            s_lower: r.s_n,
            capacity: r.capacity,
            lhs: r.lhs,
            target: r.rhs,
            alpha_n: r.alpha_n,
            bounded: r.bounded,
        })
        .collect())
}
