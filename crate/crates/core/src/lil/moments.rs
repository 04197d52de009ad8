use super::NormalizerSeries;
use crate::error::{invalid, Result};
use crate::model::SequenceModel;

/// Truncated-moment series at level `alpha s_n / t_n`:
///
/// - `gamma(n) = E~[((|X_n| - alpha s_n/t_n)^+)^p]`
/// - `gamma_bar(n)`: the same with `|X_n| ^ a_n`
/// - `lambda(n) = sum_{j<=n} E~[((|X_j| - alpha s_n/t_n)^+)^p]`
/// - `lambda_bar(n)`: the same with `|X_j| ^ a_n`
///
/// Every term is an exact one-step upper expectation. For i.i.d. models the
/// sums are `n` times the common term.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub p: f64,
    pub alpha: f64,
    gamma: Vec<f64>,
    gamma_bar: Vec<f64>,
    lambda: Vec<f64>,
    lambda_bar: Vec<f64>,
}

impl MomentSeries {
    pub fn new(model: &SequenceModel, norm: &NormalizerSeries, p: f64, alpha: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(invalid(format!("need p >= 2, got {p}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("need alpha > 0, got {alpha}")));
        }
        let len = model.horizon().min(norm.len());
        let term =
            |j: usize, level: f64, cap: f64| model.step(j - 1).upper(|x| (x.abs().min(cap) - level).max(0.0).powf(p));
        let mut out = Self {
            p,
            alpha,
            gamma: Vec::with_capacity(len),
            gamma_bar: Vec::with_capacity(len),
            lambda: Vec::with_capacity(len),
            lambda_bar: Vec::with_capacity(len),
        };
        for n in 1..=len {
            let level = alpha * norm.s(n) / norm.t(n);
            let a = norm.a(n);
            let g = term(n, level, f64::INFINITY);
            let gb = term(n, level, a);
            out.gamma.push(g);
            out.gamma_bar.push(gb);
            if model.is_iid() {
                out.lambda.push(n as f64 * g);
                out.lambda_bar.push(n as f64 * gb);
            } else {
                out.lambda.push((1..=n).map(|j| term(j, level, f64::INFINITY)).sum());
                out.lambda_bar.push((1..=n).map(|j| term(j, level, a)).sum());
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn gamma(&self, n: usize) -> f64 {
        self.gamma[n - 1]
    }

    pub fn gamma_bar(&self, n: usize) -> f64 {
        self.gamma_bar[n - 1]
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda[n - 1]
    }

    pub fn lambda_bar(&self, n: usize) -> f64 {
        self.lambda_bar[n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_rademacher_interval, LatticeSupport, StepAmbiguity};

    #[test]
    fn coin_below_level_vanishes() {
        let m = SequenceModel::iid(make_rademacher_interval(1.0, 1.0, 1).unwrap(), 50).unwrap();
        let norm = NormalizerSeries::from_model(&m).unwrap();
        // alpha s_n / t_n >= 1 once n >= 2 t_n^2 / ... ; take alpha large enough for every n.
        let ms = MomentSeries::new(&m, &norm, 2.0, 2.0).unwrap();
        for n in 1..=50 {
            assert!(2.0 * norm.s(n) / norm.t(n) >= 1.0);
            assert_eq!(ms.gamma(n), 0.0);
            assert_eq!(ms.lambda(n), 0.0);
        }
    }

    #[test]
    fn deterministic_unit_step() {
        // |X| = 1 surely, s_1 = 1, t_1 = sqrt 2: alpha = 0.5 sqrt 2 puts the level at 0.5.
        let step = StepAmbiguity::new(LatticeSupport::new(1.0, vec![-1, 1]).unwrap(), vec![vec![0.3, 0.7]]).unwrap();
        let m = SequenceModel::iid(step, 1).unwrap();
        let norm = NormalizerSeries::from_model(&m).unwrap();
        let ms = MomentSeries::new(&m, &norm, 2.0, 0.5 * 2f64.sqrt()).unwrap();
        assert!((ms.gamma(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn barred_never_exceeds_unbarred() {
        let steps = (1..=30)
            .map(|k| {
                let r = 1 + (k % 7) as i64 * 3;
                StepAmbiguity::new(
                    LatticeSupport::new(0.5, vec![-r, 0, r]).unwrap(),
                    vec![vec![0.01, 0.98, 0.01], vec![0.05, 0.9, 0.05]],
                )
                .unwrap()
            })
            .collect();
        let m = SequenceModel::explicit(steps).unwrap();
        let norm = NormalizerSeries::from_model(&m).unwrap();
        let ms = MomentSeries::new(&m, &norm, 3.0, 0.2).unwrap();
        let mut clipped = false;
        for n in 1..=30 {
            assert!(ms.gamma_bar(n) <= ms.gamma(n));
            assert!(ms.lambda_bar(n) <= ms.lambda(n));
            assert!(ms.gamma_bar(n) >= 0.0);
            clipped |= ms.gamma_bar(n) < ms.gamma(n);
        }
        assert!(clipped, "the a_n cap should bind somewhere");
    }
}
