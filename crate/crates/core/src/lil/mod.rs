//! Normalizers, moment-series conditions and finite-window LIL experiments.
//!
//! Throughout, `log x = ln max(e, x)`, so `loglog x = 1` for every `x <= e^e`.
//! With `s_n^2 = sum_{k<=n} E~[X_k^2]` the normalizers are
//! `t_n = sqrt(2 loglog s_n^2)`, `a_n = s_n t_n` and, for identically
//! distributed steps, `d_n = sqrt(2 n loglog n)`.
//!
//! Every experiment here reports capacities of events over a finite window
//! `n <= m <= N`. Nothing is extrapolated.

mod conditions;
mod experiments;
mod moments;
mod probes;

pub use conditions::{
    check_conditions, ConditionOptions, ConditionRecord, ConditionReport, RemarkChain, SeriesKind, Verdict, VerdictRule,
};
pub use experiments::{
    blocked_bound, lil_lower_experiment, lil_lower_grid, lil_upper_experiment, Center, LowerGrid, LowerRow, UpperRecord,
};
pub use moments::MomentSeries;
pub use probes::{cluster_probe, conjecture_probe, continuity_probe, ClusterRow, ConjectureRow, ContinuityRecord};

use crate::error::{invalid, Result};
use crate::model::SequenceModel;

/// `ln max(e, x)`.
pub fn log_e(x: f64) -> f64 {
    x.max(std::f64::consts::E).ln()
}

/// `log log x` under the same convention.
pub fn loglog(x: f64) -> f64 {
    log_e(log_e(x))
}

/// `sqrt(2 n loglog n)`.
pub fn d_n(n: usize) -> f64 {
    (2.0 * n as f64 * loglog(n as f64)).sqrt()
}

/// `s_n^2` and the normalizers derived from it, for `n = 1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerSeries {
    s2: Vec<f64>,
}

impl NormalizerSeries {
    /// `s2[i]` is `s_{i+1}^2`.
    pub fn from_s2(s2: Vec<f64>) -> Result<Self> {
        if let Some(v) = s2.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("s_n^2 values must be finite and nonnegative, got {v}")));
        }
        if let Some(i) = s2.windows(2).position(|w| w[1] < w[0]) {
            return Err(invalid(format!(
                "s_n^2 decreases from {} at n={} to {} at n={}",
                s2[i],
                i + 1,
                s2[i + 1],
                i + 2
            )));
        }
        Ok(Self { s2 })
    }

    /// `s_n^2 = sum_{k<=n} E~[X_k^2]` over the model's horizon.
    pub fn from_model(model: &SequenceModel) -> Result<Self> {
        let mut acc = 0.0;
        let s2 = (0..model.horizon())
            .map(|i| {
                acc += model.step(i).upper(|x| x * x);
                acc
            })
            .collect();
        Self::from_s2(s2)
    }

    pub fn len(&self) -> usize {
        self.s2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s2.is_empty()
    }

    pub fn s2(&self, n: usize) -> f64 {
        self.s2[n - 1]
    }

    pub fn s(&self, n: usize) -> f64 {
        self.s2(n).sqrt()
    }

    pub fn t(&self, n: usize) -> f64 {
        (2.0 * loglog(self.s2(n))).sqrt()
    }

    pub fn a(&self, n: usize) -> f64 {
        self.s(n) * self.t(n)
    }

    pub fn d(&self, n: usize) -> f64 {
        d_n(n)
    }
}
