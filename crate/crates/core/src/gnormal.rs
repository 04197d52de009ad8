//! G-normal tail capacities, the standard normal distribution, and the
//! lattice CLT bridge.
//!
//! For `xi ~ N(0, [sigma_lo^2, sigma_hi^2])` the upper tail is
//!
//! ```text
//! V(xi > x) = 2 sigma_hi / (sigma_lo + sigma_hi) * (1 - Phi(x / sigma_hi))   x >= 0
//!           = 1 - 2 sigma_lo / (sigma_lo + sigma_hi) * Phi(x / sigma_lo)      x <= 0
//! ```
//!
//! and the lower tail follows from `-xi` having the same law:
//! `v(xi >= x) = 1 - V(xi > -x)`.

use serde::Serialize;

use crate::capacity::{LatticeTest, Side};
use crate::error::{invalid, Result};
use crate::expectation::{Engine, TerminalSum};
use crate::model::{SequenceModel, StepAmbiguity};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Complementary error function.
///
/// For `0 <= z < 2.5` it is `1 - erf(z)` with
/// `erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_k 2^k z^(2k+1) / (1*3*...*(2k+1))`,
/// a series of positive terms. For `z >= 2.5` the continued fraction
/// `exp(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))` is evaluated
/// with the modified Lentz method. Negative arguments use `erfc(-z) = 2 - erfc(z)`.
/// Absolute error is below `1e-15` on the whole line.
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        return 2.0 - erfc(-z);
    }
    if z < 2.5 {
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= 2.0 * z2 / (2.0 * k + 1.0);
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        return 1.0 - 2.0 * FRAC_1_SQRT_PI * (-z2).exp() * sum;
    }
    if z > 27.0 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 * 0.5;
        d = z + a * d;
        d = if d.abs() < TINY { TINY } else { d };
        c = z + a / c;
        c = if c.abs() < TINY { TINY } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z * z).exp() * FRAC_1_SQRT_PI / f
}

/// `Phi(x) = erfc(-x / sqrt 2) / 2`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GNormalParams {
    sigma_lo: f64,
    sigma_hi: f64,
}

impl GNormalParams {
    pub fn new(sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        if !(sigma_lo.is_finite() && sigma_hi.is_finite() && sigma_lo > 0.0 && sigma_lo <= sigma_hi) {
            return Err(invalid(format!(
                "need 0 < sigma_lo <= sigma_hi < inf, got sigma_lo={sigma_lo}, sigma_hi={sigma_hi}"
            )));
        }
        Ok(Self { sigma_lo, sigma_hi })
    }

    /// Parameters matching a centred step: `sigma_hi^2 = E~[X^2]`, `sigma_lo^2 = E^[X^2]`.
    pub fn of_step(step: &StepAmbiguity) -> Result<Self> {
        let hi = step.upper(|x| x * x);
        let lo = step.lower(|x| x * x);
        Self::new(lo.sqrt(), hi.sqrt())
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi
    }

    fn total(&self) -> f64 {
        self.sigma_lo + self.sigma_hi
    }

    /// `V(xi > x)`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let (lo, hi) = (self.sigma_lo, self.sigma_hi);
        if x >= 0.0 {
            2.0 * hi / self.total() * std_normal_cdf(-x / hi)
        } else {
            1.0 - 2.0 * lo / self.total() * std_normal_cdf(x / lo)
        }
    }

    /// `v(xi >= x)`.
    pub fn lower_tail(&self, x: f64) -> f64 {
        let (lo, hi) = (self.sigma_lo, self.sigma_hi);
        if x >= 0.0 {
            2.0 * lo / self.total() * std_normal_cdf(-x / lo)
        } else {
            1.0 - 2.0 * hi / self.total() * std_normal_cdf(x / hi)
        }
    }

    /// Density of the upper tail: `2/(sigma_lo+sigma_hi) * phi(z/sigma)` with
    /// `sigma = sigma_hi` for `z >= 0` and `sigma_lo` below.
    pub fn density(&self, z: f64) -> f64 {
        let s = if z >= 0.0 { self.sigma_hi } else { self.sigma_lo };
        2.0 / self.total() * std_normal_pdf(z / s)
    }
}

/// Lattice capacity of `{S_n / sqrt(n) >= x}` next to its G-normal target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltRow {
    pub n: usize,
    pub x: f64,
    pub h: f64,
    /// `E~` of the ramp rising over `[x, x + h]` (below the indicator).
    pub dp_lower: f64,
    /// `E~` of the ramp rising over `[x - h, x]` (above the indicator).
    pub dp_upper: f64,
    pub mid: f64,
    /// `V(S_n >= x sqrt(n))` on the lattice itself.
    pub indicator: f64,
    pub gnormal: f64,
    pub abs_error: f64,
}

/// Bracket `V(S_n/sqrt(n) >= x)` between the upper expectations of two
/// Lipschitz ramps of width `h` (default `4 delta / sqrt(n)`) and compare the
/// midpoint with `V(xi > x)` for the matching G-normal.
pub fn clt_capacity(engine: &Engine, step: &StepAmbiguity, n: usize, x: f64, h: Option<f64>) -> Result<CltRow> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if !step.is_centered(1e-12) {
        return Err(invalid(format!(
            "step must have zero upper and lower mean, got {} and {}",
            step.upper_mean(),
            step.lower_mean()
        )));
    }
    let params = GNormalParams::of_step(step)?;
    let model = SequenceModel::iid(step.clone(), n)?;
    let root = (n as f64).sqrt();
    let delta = step.delta();
    let h = h.unwrap_or(4.0 * delta / root);
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("ramp width must be positive, got {h}")));
    }
    let ramp = |lo: f64| move |s: f64| ((s / root - lo) / h).clamp(0.0, 1.0);
    let dp_lower = engine.upper(&model, &TerminalSum::new(delta, ramp(x)))?;
    let dp_upper = engine.upper(&model, &TerminalSum::new(delta, ramp(x - h)))?;
    let test = LatticeTest::new(x * root, Side::Ge, delta);
    let indicator = engine
        .upper(
            &model,
            &crate::expectation::FnPayoff::new(
                1,
                0,
                |_, _, _, _| 0,
                |s, _| {
                    if test.holds(s) {
                        1.0
                    } else {
                        0.0
                    }
                },
            ),
        )?
        .clamp(0.0, 1.0);
    let mid = 0.5 * (dp_lower + dp_upper);
    let gnormal = params.upper_tail(x);
    Ok(CltRow { n, x, h, dp_lower, dp_upper, mid, indicator, gnormal, abs_error: (mid - gnormal).abs() })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::model::make_rademacher_interval;

    /// 40-digit reference values of Phi.
    const PHI: &[(f64, f64)] = &[
        (-8.0, 6.2209605742717841235e-16),
        (-5.0, 2.8665157187919391167e-7),
        (-3.0, 0.0013498980316300945267),
        (-2.5, 0.006209665325776135167),
        (-1.96, 0.024997895148220436213),
        (-1.0, 0.15865525393145705141),
        (-0.5, 0.30853753872598689636),
        (-0.001, 0.49960105778608893741),
        (0.0, 0.5),
        (0.3, 0.61791142218895263307),
        (1.0, 0.84134474606854294859),
        (1.5, 0.933192798731141934),
        (1.7, 0.95543453724145695634),
        (2.0, 0.9772498680518207928),
        (2.4, 0.99180246407540386857),
        (2.6, 0.99533881197628125096),
        (3.0, 0.99865010196836990547),
        (3.5, 0.99976737092096447496),
        (4.0, 0.99996832875816688008),
        (6.0, 0.99999999901341235496),
        (8.0, 0.9999999999999993779),
        (10.0, 1.0),
    ];

    #[test]
    fn cdf_matches_reference() {
        for &(x, want) in PHI {
            let got = std_normal_cdf(x);
            assert!((got - want).abs() < 1e-15, "Phi({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn erfc_relative_accuracy_in_tail() {
        for (z, want) in [
            (2.4, 0.00068851389664507888555),
            (2.6, 0.00023603441652934908781),
            (5.0, 1.5374597944280348502e-12),
            (10.0, 2.088487583762544757e-45),
        ] {
            let got = erfc(z);
            assert!(((got - want) / want).abs() < 1e-13, "erfc({z}) = {got}");
        }
    }

    #[test]
    fn cdf_agrees_with_statrs() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        // statrs drifts by about 4e-11 relative near x = -2.5, so it is only
        // a coarse oracle here; the frozen table above is the tight one.
        for i in -400..=400 {
            let x = i as f64 * 0.02;
            let (ours, theirs) = (std_normal_cdf(x), normal.cdf(x));
            assert!((ours - theirs).abs() <= 1e-9 * theirs, "x = {x}: {ours} vs {theirs}");
        }
    }

    #[test]
    fn closed_form_examples() {
        let p = GNormalParams::new(1.0, 2.0).unwrap();
        assert!((p.upper_tail(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.lower_tail(0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.upper_tail(-1.0) - 0.894230).abs() < 5e-7);
        assert!(p.lower_tail(40.0) < 1e-300);
        assert!((p.density(0.0) - 0.2659615).abs() < 1e-7);
        assert!((p.density(-0.0) - p.density(-1e-300)).abs() < 1e-15);
        let one = GNormalParams::new(1.0, 1.0).unwrap();
        assert!((one.density(0.0) - 0.3989423).abs() < 1e-7);
        assert!(GNormalParams::new(2.0, 1.0).is_err());
        assert!(GNormalParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        let p = GNormalParams::new(0.7, 1.9).unwrap();
        // Composite Simpson on each half-line, truncated at 14 sigma.
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = p.density(a) + p.density(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * p.density(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let total = simpson(-14.0 * 0.7, -0.0, 20_000) + simpson(0.0, 14.0 * 1.9, 20_000);
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn density_is_minus_derivative_of_upper_tail() {
        let p = GNormalParams::new(1.0, 2.0).unwrap();
        for x in [-2.0, -0.5, 0.4, 1.5] {
            let h = 1e-5;
            let slope = (p.upper_tail(x - h) - p.upper_tail(x + h)) / (2.0 * h);
            assert!((slope - p.density(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn clt_small_cases() {
        let coin = make_rademacher_interval(1.0, 1.0, 1).unwrap();
        let row = clt_capacity(&Engine::default(), &coin, 1, 5.0, None).unwrap();
        assert_eq!((row.dp_upper, row.indicator), (0.0, 0.0));
        let skewed = crate::model::StepAmbiguity::new(
            crate::model::LatticeSupport::new(1.0, vec![0, 1]).unwrap(),
            vec![vec![0.5, 0.5]],
        )
        .unwrap();
        assert!(clt_capacity(&Engine::default(), &skewed, 4, 0.0, None).is_err());
    }
}
