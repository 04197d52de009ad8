//! Numerical checks of the moment-series conditions used by the LIL upper and lower bounds.
//!
//! Each condition is a series (partial sums are reported) or a sequence
//! (values are reported) evaluated at user checkpoints. Verdicts only look at
//! the "last decade" of checkpoints, those `>= n_last / 10`, and follow
//! [`VerdictRule`]. They are heuristics over finite data and nothing more.

use serde::Serialize;

use super::{log_e, loglog, MomentSeries, NormalizerSeries};
use crate::error::{invalid, Result};
use crate::model::SequenceModel;
use crate::table::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConvergentTrend,
    DivergentTrend,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ConvergentTrend => "convergent-trend",
            Verdict::DivergentTrend => "divergent-trend",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds of the verdict heuristic.
///
/// Series: convergent when every partial-sum increment in the last decade is
/// below `increment_tol` and each checkpoint term is below `ratio` times the
/// previous one; divergent when the increments never shrink or every term
/// stays at or above `floor`.
///
/// Sequences that should vanish: convergent when every value is below
/// `increment_tol`, or the values never increase and the last is at most
/// `ratio` times the first; divergent when they never decrease and end at or
/// above `floor`.
///
/// Running suprema that should stay bounded: convergent when constant across
/// the decade, divergent when strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictRule {
    pub increment_tol: f64,
    pub ratio: f64,
    pub floor: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self { increment_tol: 1e-6, ratio: 0.9, floor: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    /// Partial sums of a series that should converge (or diverge, see id).
    Series,
    /// A sequence that should tend to zero.
    Vanishing,
    /// A running supremum that should stay bounded.
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRecord {
    pub id: &'static str,
    pub kind: SeriesKind,
    pub checkpoints: Vec<usize>,
    /// Partial sums (series) or sequence values at the checkpoints.
    pub values: Vec<f64>,
    /// Series term at each checkpoint; equals `values` for sequences.
    pub terms: Vec<f64>,
    pub verdict: Verdict,
    pub details: String,
}

/// Termwise chain `(eps/2)^p V(|X_n| >= eps a_n) <= gamma_bar(n)/a_n^p <= gamma(n)/a_n^p`,
/// checked wherever `eps a_n / 2 > alpha s_n / t_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemarkChain {
    pub checked: usize,
    pub skipped: usize,
    pub violations: Vec<usize>,
}

/// Lower estimate for the variance-divergence partial sums under bounded growth
/// `s_k <= B s_{k-1}`:
/// `sum_{k0<k<=n} s_k^{-2} (log s_k^2)^(delta-1) E~[X_k^2] >= (F(s_n^2) - F(s_k0^2)) / C`
/// with `F` an antiderivative of `(log x)^(delta-1)/x` and
/// `C = B^2 (1 + 2 ln B)^max(1 - delta, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub checkpoints: Vec<usize>,
    pub partial_sums: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub records: Vec<ConditionRecord>,
    pub remark_chain: RemarkChain,
    pub growth: GrowthCheck,
}

impl ConditionReport {
    pub fn record(&self, id: &str) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["condition", "n", "value", "term", "verdict"]);
        for r in &self.records {
            for ((n, v), term) in r.checkpoints.iter().zip(&r.values).zip(&r.terms) {
                t.push(vec![r.id.to_string(), n.to_string(), num(*v), num(*term), r.verdict.as_str().to_string()]);
            }
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionOptions {
    pub p: f64,
    pub alpha: f64,
    /// Exponent on the `lambda / a_n^p` factor.
    pub d: f64,
    /// `eps` in the tail-capacity series and the termwise chain.
    pub eps: f64,
    /// `delta` in the variance-divergence series.
    pub delta: f64,
    pub wittmann_p: f64,
    pub rule: VerdictRule,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self { p: 3.0, alpha: 1.0, d: 0.0, eps: 0.5, delta: 0.5, wittmann_p: 3.0, rule: VerdictRule::default() }
    }
}

fn ratio_term(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

pub fn check_conditions(
    model: &SequenceModel,
    checkpoints: &[usize],
    opts: &ConditionOptions,
) -> Result<ConditionReport> {
    if checkpoints.is_empty() {
        return Err(invalid("need at least one checkpoint"));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints must be positive and strictly increasing"));
    }
    let last = *checkpoints.last().unwrap();
    if last > model.horizon() {
        return Err(invalid(format!("checkpoint {last} exceeds the horizon {}", model.horizon())));
    }
    if !(opts.d >= 0.0 && opts.eps > 0.0 && opts.delta > 0.0 && opts.wittmann_p > 0.0) {
        return Err(invalid("need d >= 0 and eps, delta, wittmann_p > 0"));
    }
    let model = model.with_horizon(last)?;
    let norm = NormalizerSeries::from_model(&model)?;
    let moments = MomentSeries::new(&model, &norm, opts.p, opts.alpha)?;
    let p = opts.p;

    let mut tail = Vec::with_capacity(last);
    let mut barred = Vec::with_capacity(last);
    let mut unbarred = Vec::with_capacity(last);
    let mut variance = Vec::with_capacity(last);
    let mut mean_ratio = Vec::with_capacity(last);
    let mut kolmogorov = Vec::with_capacity(last);
    let mut wittmann = Vec::with_capacity(last);
    let mut growth_sup = Vec::with_capacity(last);
    let mut chain = RemarkChain { checked: 0, skipped: 0, violations: Vec::new() };
    let (mut mean_abs, mut sup) = (0.0, 0.0f64);
    for n in 1..=last {
        let step = model.step(n - 1);
        let (s2, a, t) = (norm.s2(n), norm.a(n), norm.t(n));
        let ap = a.powf(p);
        let level = opts.alpha * norm.s(n) / t;
        let tail_n = step.upper_prob(|x| x.abs() >= opts.eps * a);
        tail.push(tail_n);
        let gb = ratio_term(moments.gamma_bar(n), ap);
        let g = ratio_term(moments.gamma(n), ap);
        let lb = ratio_term(moments.lambda_bar(n), ap);
        let l = ratio_term(moments.lambda(n), ap);
        barred.push(if opts.d == 0.0 { gb } else { gb * lb.powf(opts.d) });
        unbarred.push(if opts.d == 0.0 { g } else { g * l.powf(opts.d) });
        let ex2 = step.upper(|x| x * x);
        variance.push(if s2 > 0.0 { ex2 / s2 * log_e(s2).powf(opts.delta - 1.0) } else { 0.0 });
        mean_abs += step.upper_mean().abs() + step.lower_mean().abs();
        mean_ratio.push(ratio_term(mean_abs, a));
        kolmogorov.push(ratio_term(step.support().radius() * t, norm.s(n)));
        let abs_p = step.upper(|x| x.abs().powf(opts.wittmann_p));
        wittmann.push(ratio_term(abs_p, (2.0 * s2 * loglog(s2)).powf(opts.wittmann_p / 2.0)));
        if n >= 2 && norm.s2(n - 1) > 0.0 {
            sup = sup.max(norm.s(n) / norm.s(n - 1));
        }
        growth_sup.push(sup);

        if opts.eps <= 1.0 && opts.eps * a / 2.0 > level {
            chain.checked += 1;
            let left = (opts.eps / 2.0).powf(p) * tail_n;
            let tol = 1e-12 * g.abs().max(1e-300);
            if left > gb + tol || gb > g + tol {
                chain.violations.push(n);
            }
        } else {
            chain.skipped += 1;
        }
    }

    let at = |v: &[f64]| checkpoints.iter().map(|&n| v[n - 1]).collect::<Vec<f64>>();
    let partial = |v: &[f64]| {
        let mut acc = 0.0;
        let sums: Vec<f64> = v
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        at(&sums)
    };
    let rule = opts.rule;
    let series = |id, terms: &[f64], details: String| {
        let values = partial(terms);
        let terms = at(terms);
        let verdict = series_verdict(checkpoints, &values, &terms, &rule);
        ConditionRecord {
            id,
            kind: SeriesKind::Series,
            checkpoints: checkpoints.to_vec(),
            values,
            terms,
            verdict,
            details,
        }
    };
    let sequence = |id, kind, v: &[f64], details: String| {
        let values = at(v);
        let verdict = match kind {
            SeriesKind::Bounded => bounded_verdict(checkpoints, &values),
            _ => vanishing_verdict(checkpoints, &values, &rule),
        };
        ConditionRecord { id, kind, checkpoints: checkpoints.to_vec(), terms: values.clone(), values, verdict, details }
    };

    let records = vec![
        series("tail-capacity-sum", &tail, format!("sum V(|X_n| >= eps a_n), eps = {}", opts.eps)),
        series(
            "moment-sum-barred",
            &barred,
            format!("sum gamma_bar/a_n^p (lambda_bar/a_n^p)^d, p = {}, alpha = {}, d = {}", p, opts.alpha, opts.d),
        ),
        series(
            "moment-sum",
            &unbarred,
            format!("sum gamma/a_n^p (lambda/a_n^p)^d, p = {}, alpha = {}, d = {}", p, opts.alpha, opts.d),
        ),
        series(
            "variance-divergence",
            &variance,
            format!("sum s_n^-2 (log s_n^2)^(delta-1) E~[X_n^2], delta = {}; should diverge", opts.delta),
        ),
        sequence("mean-ratio", SeriesKind::Vanishing, &mean_ratio, "(sum |E~[X_j]| + sum |E^[X_j]|) / a_n".to_string()),
        sequence("kolmogorov", SeriesKind::Vanishing, &kolmogorov, "alpha_n = max|X_n| t_n / s_n".to_string()),
        series(
            "wittmann",
            &wittmann,
            format!("sum E~[|X_n|^p] / (2 s_n^2 loglog s_n^2)^(p/2), p = {}", opts.wittmann_p),
        ),
        sequence("growth-ratio", SeriesKind::Bounded, &growth_sup, "running max of s_n / s_(n-1)".to_string()),
    ];

    let growth = growth_check(&norm, &variance, checkpoints, opts.delta);
    Ok(ConditionReport { records, remark_chain: chain, growth })
}

/// Antiderivative of `(log x)^(delta-1) / x` with `log x = ln max(e, x)`.
fn antiderivative(x: f64, delta: f64) -> f64 {
    if x <= std::f64::consts::E {
        x.ln()
    } else {
        1.0 + (x.ln().powf(delta) - 1.0) / delta
    }
}

fn growth_check(norm: &NormalizerSeries, terms: &[f64], checkpoints: &[usize], delta: f64) -> GrowthCheck {
    let first = (1..=norm.len()).find(|&k| norm.s2(k) > 0.0);
    let mut partial_sums = Vec::new();
    let mut lower_bounds = Vec::new();
    let mut cps = Vec::new();
    let mut holds = true;
    if let Some(k0) = first {
        let mut acc = 0.0;
        let mut b = 1.0f64;
        let mut next = checkpoints.iter().copied().filter(|&n| n > k0).peekable();
        for k in k0 + 1..=norm.len() {
            acc += terms[k - 1];
            b = b.max(norm.s(k) / norm.s(k - 1));
            if next.peek() == Some(&k) {
                next.next();
                let c = b * b * (1.0 + 2.0 * b.ln()).powf((1.0 - delta).max(0.0));
                let bound = (antiderivative(norm.s2(k), delta) - antiderivative(norm.s2(k0), delta)) / c;
                holds &= acc >= bound - 1e-12 * bound.abs().max(1.0);
                cps.push(k);
                partial_sums.push(acc);
                lower_bounds.push(bound);
            }
        }
    }
    GrowthCheck { checkpoints: cps, partial_sums, lower_bounds, holds }
}

fn last_decade(checkpoints: &[usize]) -> usize {
    let last = *checkpoints.last().unwrap();
    checkpoints.iter().position(|&n| n * 10 >= last).unwrap()
}

fn series_verdict(checkpoints: &[usize], values: &[f64], terms: &[f64], rule: &VerdictRule) -> Verdict {
    let start = last_decade(checkpoints);
    if values.len() - start < 2 {
        return Verdict::Inconclusive;
    }
    let (v, t) = (&values[start..], &terms[start..]);
    let inc: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let small = inc.iter().all(|&d| d < rule.increment_tol);
    let shrinking = t.windows(2).all(|w| w[1] == 0.0 || w[1] < rule.ratio * w[0]);
    if small && shrinking {
        return Verdict::ConvergentTrend;
    }
    let growing = inc.len() >= 2 && inc[0] > 0.0 && inc.windows(2).all(|w| w[1] >= w[0]);
    if growing || t.iter().all(|&x| x >= rule.floor) {
        return Verdict::DivergentTrend;
    }
    Verdict::Inconclusive
}

fn vanishing_verdict(checkpoints: &[usize], values: &[f64], rule: &VerdictRule) -> Verdict {
    let v = &values[last_decade(checkpoints)..];
    if v.iter().all(|&x| x.abs() < rule.increment_tol) {
        return Verdict::ConvergentTrend;
    }
    if v.len() < 2 {
        return Verdict::Inconclusive;
    }
    let (first, last) = (v[0], v[v.len() - 1]);
    if v.windows(2).all(|w| w[1] <= w[0]) && last <= rule.ratio * first {
        return Verdict::ConvergentTrend;
    }
    if v.windows(2).all(|w| w[1] >= w[0]) && last >= rule.floor {
        return Verdict::DivergentTrend;
    }
    Verdict::Inconclusive
}

fn bounded_verdict(checkpoints: &[usize], values: &[f64]) -> Verdict {
    let v = &values[last_decade(checkpoints)..];
    if v.len() < 2 {
        return Verdict::Inconclusive;
    }
    if v.windows(2).all(|w| w[1] == w[0]) {
        Verdict::ConvergentTrend
    } else if v.windows(2).all(|w| w[1] > w[0]) {
        Verdict::DivergentTrend
    } else {
        Verdict::Inconclusive
    }
}
