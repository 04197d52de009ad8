//! Finite-window LIL capacity experiments.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NormalizerSeries;
use crate::bounds::kolmogorov_bound;
use crate::capacity::{upper_capacity, window_max_event, Side, Stat};
use crate::error::{invalid, Error, Result};
use crate::expectation::Engine;
use crate::model::SequenceModel;

/// Centring `c_m` subtracted from `S_m` in the upper experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Center {
    /// `c_m = E~[S_m]`.
    UpperMean,
    /// `c_m = E^[S_m]`.
    LowerMean,
    /// `c_m = 0`.
    None,
}

impl Center {
    pub fn as_str(self) -> &'static str {
        match self {
            Center::UpperMean => "upper-mean",
            Center::LowerMean => "lower-mean",
            Center::None => "none",
        }
    }
}

impl FromStr for Center {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper-mean" => Ok(Center::UpperMean),
            "lower-mean" => Ok(Center::LowerMean),
            "none" => Ok(Center::None),
            _ => Err(invalid(format!("unknown centre {s:?}; expected upper-mean, lower-mean or none"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperRecord {
    pub n: usize,
    pub end: usize,
    pub eps: f64,
    pub center: Center,
    /// `V(exists m in [n, N] : S_m - c_m > (1 + eps) a_m)`.
    pub capacity: f64,
    /// Blocked exponential estimate, see [`blocked_bound`].
    pub bound: f64,
    pub blocks: usize,
    pub within_bound: bool,
}

/// Cumulative means `(E~[S_m], E^[S_m])` for `m = 0..=horizon`.
fn cumulative_means(model: &SequenceModel) -> (Vec<f64>, Vec<f64>) {
    let (mut up, mut low) = (vec![0.0], vec![0.0]);
    for i in 0..model.horizon() {
        let s = model.step(i);
        up.push(up[i] + s.upper_mean());
        low.push(low[i] + s.lower_mean());
    }
    (up, low)
}

fn centring(model: &SequenceModel, center: Center) -> Vec<f64> {
    let (up, low) = cumulative_means(model);
    match center {
        Center::UpperMean => up,
        Center::LowerMean => low,
        Center::None => vec![0.0; up.len()],
    }
}

fn check_window(model: &SequenceModel, n: usize, end: usize) -> Result<()> {
    if n < 1 || n > end || end > model.horizon() {
        return Err(invalid(format!("window [{n}, {end}] must satisfy 1 <= n <= N <= horizon {}", model.horizon())));
    }
    Ok(())
}

/// Union bound over dyadic blocks `m_0 = n`, `m_{k+1} = min(2 m_k, N)`.
///
/// On block `[m_k, m_{k+1}]` the event forces
/// `max_{m <= m_{k+1}} (S_m - E~[S_m]) > x_k` with
/// `x_k = (1 + eps) a_{m_k} - max_{m in block} (E~[S_m] - c_m)`, so each block
/// contributes the Kolmogorov-type term at `x_k`, `y` and `B^2_{m_{k+1}, y}`,
/// or 1 when `x_k <= 0`. With `y` the largest support value the tail term
/// `V(max X_i > y)` vanishes. The result may exceed one.
pub fn blocked_bound(model: &SequenceModel, n: usize, end: usize, eps: f64, center: Center) -> Result<(f64, usize)> {
    check_window(model, n, end)?;
    let norm = NormalizerSeries::from_model(model)?;
    let (up, _) = cumulative_means(model);
    let c = centring(model, center);
    let y = (0..end)
        .map(|i| model.step(i).support().values().fold(f64::NEG_INFINITY, f64::max))
        .fold(model.delta(), f64::max);
    let mut b2 = vec![0.0];
    for i in 0..end {
        b2.push(b2[i] + model.step(i).upper(|v| v.min(y).powi(2)));
    }
    let (mut total, mut blocks) = (0.0, 0);
    let mut lo = n;
    loop {
        let hi = (2 * lo).min(end);
        let drift = (lo..=hi).map(|m| up[m] - c[m]).fold(f64::NEG_INFINITY, f64::max);
        let x = (1.0 + eps) * norm.a(lo) - drift;
        total += if x > 0.0 && b2[hi] > 0.0 {
            kolmogorov_bound(x, y, b2[hi])
        } else if x > 0.0 {
            0.0
        } else {
            1.0
        };
        blocks += 1;
        if hi == end {
            break;
        }
        lo = hi;
    }
    Ok((total, blocks))
}

/// Exact `V(exists m in [n, N] : S_m - c_m > (1 + eps) a_m)` with the blocked
/// estimate alongside.
pub fn lil_upper_experiment(
    engine: &Engine,
    model: &SequenceModel,
    n: usize,
    end: usize,
    eps: f64,
    center: Center,
) -> Result<UpperRecord> {
    check_window(model, n, end)?;
    if eps.is_nan() {
        return Err(invalid("eps must be a number"));
    }
    let model = model.with_horizon(end)?;
    let norm = NormalizerSeries::from_model(&model)?;
    let c = centring(&model, center);
    let event = window_max_event(&model, n, end, |m| (1.0 + eps) * norm.a(m) + c[m], Side::Gt, Stat::Sum)?;
    let capacity = upper_capacity(engine, &model, &event)?;
    let (bound, blocks) = blocked_bound(&model, n, end, eps, center)?;
    Ok(UpperRecord { n, end, eps, center, capacity, bound, blocks, within_bound: capacity <= bound + 1e-12 })
}

/// Exact `V(max_{n <= m <= N} S_m / a_m >= 1 - eps)`.
pub fn lil_lower_experiment(engine: &Engine, model: &SequenceModel, n: usize, end: usize, eps: f64) -> Result<f64> {
    check_window(model, n, end)?;
    if eps.is_nan() {
        return Err(invalid("eps must be a number"));
    }
    let model = model.with_horizon(end)?;
    let norm = NormalizerSeries::from_model(&model)?;
    let event = window_max_event(&model, n, end, |m| (1.0 - eps) * norm.a(m), Side::Ge, Stat::Sum)?;
    upper_capacity(engine, &model, &event)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerRow {
    pub n: usize,
    pub end: usize,
    pub eps: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerGrid {
    pub rows: Vec<LowerRow>,
    /// `(n, N)` pairs whose value fell below the one at the previous `N`.
    pub violations: Vec<(usize, usize)>,
}

/// [`lil_lower_experiment`] over every `(n, N)` with `n <= N`, checking that
/// the values never decrease in `N`.
pub fn lil_lower_grid(
    engine: &Engine,
    model: &SequenceModel,
    ns: &[usize],
    ends: &[usize],
    eps: f64,
) -> Result<LowerGrid> {
    let mut ends = ends.to_vec();
    ends.sort_unstable();
    ends.dedup();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &n in ns {
        let mut prev = f64::NEG_INFINITY;
        for &end in ends.iter().filter(|&&e| e >= n) {
            let capacity = lil_lower_experiment(engine, model, n, end, eps)?;
            if capacity < prev {
                violations.push((n, end));
            }
            prev = capacity;
            rows.push(LowerRow { n, end, eps, capacity });
        }
    }
    Ok(LowerGrid { rows, violations })
}
