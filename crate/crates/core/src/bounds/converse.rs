//! Finite-`n` rows of the converse exponential rate
//! `x_n^{-2} ln V(S_n >= z s_n x_n)` against `-z^2 (1 + gamma) / 2`.

use serde::{Deserialize, Serialize};

use super::pi_gamma;
use crate::capacity::{lower_capacity, upper_capacity, window_max_event, Side, Stat};
use crate::error::{invalid, Result};
use crate::expectation::Engine;
use crate::lil::loglog;
use crate::model::SequenceModel;

/// Choice of the rate sequence `x_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RateNormalizer {
    /// `sqrt(2 loglog n)` with `log x = ln max(e, x)`.
    LogLog,
    /// `n^exponent`.
    Power { exponent: f64 },
}

impl RateNormalizer {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            RateNormalizer::LogLog => (2.0 * loglog(n as f64)).sqrt(),
            RateNormalizer::Power { exponent } => (n as f64).powf(exponent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverseParams {
    pub z: f64,
    pub gamma: f64,
    /// Declared bound `|X_{n,i}| <= alpha s_n / x_n`; defaults to `pi(gamma)/z`.
    pub alpha: Option<f64>,
    pub slack: f64,
    pub normalizer: RateNormalizer,
}

impl ConverseParams {
    pub fn new(z: f64, gamma: f64) -> Self {
        Self { z, gamma, alpha: None, slack: 0.1, normalizer: RateNormalizer::LogLog }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConverseRow {
    pub n: usize,
    pub x_n: f64,
    pub s_n: f64,
    pub capacity: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `max |X| x_n / s_n`, the smallest `alpha` the row actually satisfies.
    pub alpha_n: f64,
    /// Whether `alpha_n` is within the declared `alpha`.
    pub bounded: bool,
    /// Set on the last row only: `lhs < rhs - slack`.
    pub violation: bool,
}

/// One row per `n`; `family(n)` supplies the `n`-th row of the array.
///
/// Fails when `z * alpha > pi(gamma)`. Rows whose steps exceed the declared
/// bound are still computed and carry `bounded = false`.
pub fn converse_rate_check(
    engine: &Engine,
    family: &dyn Fn(usize) -> Result<SequenceModel>,
    params: &ConverseParams,
    n_list: &[usize],
) -> Result<Vec<ConverseRow>> {
    let mut rows = rate_rows(engine, family, params, n_list, false)?;
    if let Some(last) = rows.last_mut() {
        last.violation = last.lhs < last.rhs - params.slack;
    }
    Ok(rows)
}

/// Shared row builder. With `lower` set, `s_n` is built from `E^[X^2]` and the
/// capacity is the lower one; `violation` is left unset.
pub(crate) fn rate_rows(
    engine: &Engine,
    family: &dyn Fn(usize) -> Result<SequenceModel>,
    params: &ConverseParams,
    n_list: &[usize],
    lower: bool,
) -> Result<Vec<ConverseRow>> {
    let ConverseParams { z, gamma, normalizer, .. } = *params;
    if !(z > 0.0 && z.is_finite()) {
        return Err(invalid(format!("z must be positive, got {z}")));
    }
    let pi = pi_gamma(gamma)?;
    let alpha = params.alpha.unwrap_or(pi / z);
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if z * alpha > pi {
        return Err(invalid(format!(
            "z * alpha = {} exceeds pi(gamma) = {pi} (z = {z}, alpha = {alpha}, gamma = {gamma})",
            z * alpha
        )));
    }
    let rhs = -z * z * (1.0 + gamma) / 2.0;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let model = family(n)?;
        let k = model.horizon();
        let s2: f64 = (0..k)
            .map(|i| {
                let step = model.step(i);
                if lower {
                    step.lower(|v| v * v)
                } else {
                    step.upper(|v| v * v)
                }
            })
            .sum();
        let s_n = s2.sqrt();
        if s_n == 0.0 {
            return Err(invalid(format!("degenerate row n = {n}: s_n = 0")));
        }
        let x_n = normalizer.at(n);
        let max_abs = (0..k).map(|i| model.step(i).support().radius()).fold(0.0, f64::max);
        let alpha_n = max_abs * x_n / s_n;
        let event = window_max_event(&model, k, k, |_| z * s_n * x_n, Side::Ge, Stat::Sum)?;
        let capacity =
            if lower { lower_capacity(engine, &model, &event)? } else { upper_capacity(engine, &model, &event)? };
        rows.push(ConverseRow {
            n,
            x_n,
            s_n,
            capacity,
            lhs: capacity.ln() / (x_n * x_n),
            rhs,
            alpha_n,
            bounded: alpha_n <= alpha,
            violation: false,
        });
    }
    Ok(rows)
}
