//! Closed-form exponential inequalities for maximal partial sums.
//!
//! Notation for independent `X_1..X_n` and `y > 0`:
//!
//! - `B^2_{n,y} = sum E~[(X_i ^ y)^2]`, `b^2_{n,y} = sum E^[(X_i ^ y)^2]`;
//! - `A_n(p, y) = sum E~[(X_i^+ ^ y)^p]`;
//! - `max_tail = V(max_i X_i > y)`.
//!
//! The functions return raw bound values, which may exceed one.

mod converse;
mod verify;

pub(crate) use converse::rate_rows;
pub use converse::{converse_rate_check, ConverseParams, ConverseRow, RateNormalizer};
pub use verify::{verify_domination, DominationReport, DominationRow, DominationSpec, VIOLATION_TOLERANCE};

use serde::Serialize;

use crate::error::{invalid, Result};

/// Largest `delta` used in [`pi_gamma`]; the construction needs `delta < 1/4`.
pub const PI_DELTA_CAP: f64 = 0.2499;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub delta: f64,
    /// Variance proxy, `B^2_{n,y}` or `b^2_{n,y}`.
    pub v2: f64,
    /// `A_n(p, y)`.
    pub a_moment: f64,
    /// `V(max_i X_i > y)`.
    pub max_tail: f64,
}

impl BoundInputs {
    pub fn new(x: f64, y: f64, p: f64, delta: f64, v2: f64, a_moment: f64, max_tail: f64) -> Result<Self> {
        let finite = [x, y, p, delta, v2, a_moment, max_tail].iter().all(|v| v.is_finite());
        if !finite {
            return Err(invalid("bound inputs must be finite"));
        }
        if x <= 0.0 || y <= 0.0 || v2 <= 0.0 {
            return Err(invalid(format!("need x, y, v2 > 0, got x={x}, y={y}, v2={v2}")));
        }
        if p < 2.0 {
            return Err(invalid(format!("need p >= 2, got {p}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("need 0 < delta <= 1, got {delta}")));
        }
        if a_moment < 0.0 {
            return Err(invalid(format!("moment sum must be nonnegative, got {a_moment}")));
        }
        if !(0.0..=1.0).contains(&max_tail) {
            return Err(invalid(format!("max_tail must lie in [0, 1], got {max_tail}")));
        }
        Ok(Self { x, y, p, delta, v2, a_moment, max_tail })
    }
}

/// `exp{-x^2 / (2(xy + v2)) * (1 + (2/3) ln(1 + xy/v2))}`.
///
/// Only the exponential term; the inequality adds `V(max X_i > y)`.
pub fn kolmogorov_bound(x: f64, y: f64, v2: f64) -> f64 {
    kolmogorov_term(x, y, v2)
}

/// Same formula with `v2 = 0` allowed (the exponent is then infinite).
pub(crate) fn kolmogorov_term(x: f64, y: f64, v2: f64) -> f64 {
    let xy = x * y;
    let rate = x * x / (2.0 * (xy + v2)) * (1.0 + 2.0 / 3.0 * (xy / v2).ln_1p());
    (-rate).exp()
}

/// `max_tail + 2 e^{p^p} (A/y^p)^{delta x/(10 y)} + exp{-x^2/(2(1+delta) v2)}`.
pub fn fuk_nagaev_bound(inputs: &BoundInputs) -> f64 {
    fuk_nagaev_terms(inputs.x, inputs.y, inputs.p, inputs.delta, inputs.v2, inputs.a_moment, inputs.max_tail)
}

pub(crate) fn fuk_nagaev_terms(x: f64, y: f64, p: f64, delta: f64, v2: f64, a: f64, max_tail: f64) -> f64 {
    let moment = if a == 0.0 { 0.0 } else { 2.0 * p.powf(p).exp() * (a / y.powf(p)).powf(delta * x / (10.0 * y)) };
    max_tail + moment + gaussian_term(x, delta, v2)
}

fn gaussian_term(x: f64, delta: f64, v2: f64) -> f64 {
    (-x * x / (2.0 * (1.0 + delta) * v2)).exp()
}

/// `c_p delta^{-p} x^{-p} sum E~[(X_i^+)^p] + exp{-x^2/(2(1+delta) v2)}`.
///
/// `c_p` has no published value and must be supplied.
pub fn simplified_bound(x: f64, p: f64, delta: f64, c_p: f64, abs_moment_sum: f64, v2: f64) -> Result<f64> {
    if !(c_p.is_finite() && c_p > 0.0) {
        return Err(invalid(format!("c_p must be positive, got {c_p}")));
    }
    Ok(c_p * delta.powf(-p) * x.powf(-p) * abs_moment_sum + gaussian_term(x, delta, v2))
}

/// Admissible `z * alpha` level in the converse exponential inequality:
/// `delta^2 / (16 (1 + delta)^2)` with
/// `delta = min((sqrt(1+gamma) - 1)/(sqrt(1+gamma) + 1), 0.2499)`.
pub fn pi_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    let r = (1.0 + gamma).sqrt();
    let delta = if r.is_finite() { ((r - 1.0) / (r + 1.0)).min(PI_DELTA_CAP) } else { PI_DELTA_CAP };
    Ok(delta * delta / (16.0 * (1.0 + delta) * (1.0 + delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kolmogorov_examples() {
        let want = (-0.25 * (1.0 + 2.0 / 3.0 * 2f64.ln())).exp();
        assert!((kolmogorov_bound(1.0, 1.0, 1.0) - want).abs() < 1e-15);
        assert!((kolmogorov_bound(1.0, 1.0, 1.0) - 0.6938).abs() < 5e-5);
        assert!((kolmogorov_bound(2.0, 1e-9, 1.0) - (-2f64).exp()).abs() < 1e-8);
        assert!((kolmogorov_bound(1e-9, 1.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fuk_nagaev_examples() {
        let b = BoundInputs::new(10.0, 1.0, 2.0, 1.0, 1.0, 0.01, 0.0).unwrap();
        let want = 2.0 * 4f64.exp() * 0.01 + (-25f64).exp();
        assert!((fuk_nagaev_bound(&b) - want).abs() < 1e-14);
        assert!((fuk_nagaev_bound(&b) - 1.09196).abs() < 5e-6);
        let b = BoundInputs::new(10.0, 0.5, 2.0, 1.0, 1.0, 1e-6, 0.0).unwrap();
        let want = 2.0 * 4f64.exp() * 16e-12 + (-25f64).exp();
        assert!((fuk_nagaev_bound(&b) / want - 1.0).abs() < 1e-12);
        assert!((fuk_nagaev_bound(&b) - 1.761e-9).abs() < 1e-12);
        let b = BoundInputs::new(3.0, 1.0, 2.0, 0.5, 2.0, 0.0, 0.25).unwrap();
        assert_eq!(fuk_nagaev_bound(&b), 0.25 + (-9.0f64 / 6.0).exp());
    }

    #[test]
    fn simplified_examples() {
        let v = simplified_bound(10.0, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 0.01 - (-25f64).exp()).abs() < 1e-15);
        assert_eq!(simplified_bound(10.0, 2.0, 1.0, 1.0, 0.0, 1.0).unwrap(), (-25f64).exp());
        assert!(simplified_bound(1e-6, 2.0, 1.0, 1.0, 1.0, 1.0).unwrap() > 1e11);
        assert!(simplified_bound(1.0, 2.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn pi_gamma_examples() {
        assert!((pi_gamma(1.0).unwrap() - 0.0013404).abs() < 5e-8);
        assert!((pi_gamma(0.1).unwrap() - 3.384e-5).abs() < 5e-9);
        assert!((pi_gamma(1e12).unwrap() - 0.0024984).abs() < 5e-8);
        assert!((pi_gamma(f64::INFINITY).unwrap() - 0.0024984).abs() < 5e-8);
        assert!(pi_gamma(0.0).is_err());
    }

    #[test]
    fn input_validation() {
        assert!(BoundInputs::new(0.0, 1.0, 2.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(BoundInputs::new(1.0, 1.0, 1.5, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(BoundInputs::new(1.0, 1.0, 2.0, 1.5, 1.0, 0.0, 0.0).is_err());
        assert!(BoundInputs::new(1.0, 1.0, 2.0, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(BoundInputs::new(1.0, 1.0, 2.0, 1.0, 1.0, 0.0, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn kolmogorov_monotone(x in 0.01f64..20.0, dx in 0.0f64..5.0, y in 0.01f64..5.0,
                               v in 0.01f64..20.0, dv in 0.0f64..5.0) {
            prop_assert!(kolmogorov_bound(x + dx, y, v) <= kolmogorov_bound(x, y, v) + 1e-15);
            prop_assert!(kolmogorov_bound(x, y, v) <= kolmogorov_bound(x, y, v + dv) + 1e-15);
            let k = kolmogorov_bound(x, y, v);
            prop_assert!(k > 0.0 || x * x / v > 1000.0);
            prop_assert!(k <= 1.0);
        }

        #[test]
        fn fuk_nagaev_dominates_gaussian_term(x in 0.01f64..20.0, y in 0.01f64..5.0, p in 2.0f64..4.0,
                                             d in 0.01f64..1.0, v in 0.01f64..20.0, a in 0.0f64..10.0,
                                             t in 0.0f64..1.0) {
            let b = BoundInputs::new(x, y, p, d, v, a, t).unwrap();
            prop_assert!(fuk_nagaev_bound(&b) >= (-x * x / (2.0 * (1.0 + d) * v)).exp());
        }

        #[test]
        fn pi_gamma_monotone(g in 1e-6f64..1e6, dg in 0.0f64..1e3) {
            let a = pi_gamma(g).unwrap();
            let b = pi_gamma(g + dg).unwrap();
            prop_assert!(a <= b);
            prop_assert!(b <= 0.0024985);
        }
    }
}
