//! Payoffs written as short formulas in one variable.
//!
//! Accepted forms, with `V` the variable name (`S` or `x`) and `a`, `k`, `t`
//! real literals:
//!
//! - `V`, `-V`, `V^a`, `|V|`, `|V|^a`
//! - `max(V-k,0)`, `max(k-V,0)`
//! - `exp(t*V)`
//! - `min(max(V,-k),k)` (truncation at level `k`)
//!
//! Whitespace is ignored.

use crate::error::{config_err, CliError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Formula {
    Identity,
    Negated,
    Power(f64),
    Abs,
    AbsPower(f64),
    Call(f64),
    Put(f64),
    Exp(f64),
    Clip(f64),
}

impl Formula {
    pub fn parse(text: &str, var: &str) -> Result<Self, CliError> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || {
            config_err(format!(
                "cannot read payoff `{text}`; expected one of {v}, -{v}, {v}^a, |{v}|, |{v}|^a, max({v}-k,0), max(k-{v},0), exp(t*{v}), min(max({v},-k),k)",
                v = var
            ))
        };
        let num = |t: &str| t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let abs = format!("|{var}|");
        if s == var {
            return Ok(Formula::Identity);
        }
        if s == format!("-{var}") {
            return Ok(Formula::Negated);
        }
        if s == abs {
            return Ok(Formula::Abs);
        }
        if let Some(p) = s.strip_prefix(&format!("{abs}^")) {
            return Ok(Formula::AbsPower(num(p)?));
        }
        if let Some(p) = s.strip_prefix(&format!("{var}^")) {
            return Ok(Formula::Power(num(p)?));
        }
        if let Some(k) = s.strip_prefix(&format!("max({var}-")).and_then(|r| r.strip_suffix(",0)")) {
            return Ok(Formula::Call(num(k)?));
        }
        if let Some(k) = s.strip_prefix("max(").and_then(|r| r.strip_suffix(&format!("-{var},0)"))) {
            return Ok(Formula::Put(num(k)?));
        }
        if let Some(t) = s.strip_prefix("exp(").and_then(|r| r.strip_suffix(&format!("*{var})"))) {
            return Ok(Formula::Exp(num(t)?));
        }
        if let Some(rest) = s.strip_prefix(&format!("min(max({var},-")) {
            if let Some((a, b)) = rest.strip_suffix(')').and_then(|r| r.split_once("),")) {
                let (a, b) = (num(a)?, num(b)?);
                if a == b && a > 0.0 {
                    return Ok(Formula::Clip(a));
                }
            }
        }
        Err(bad())
    }

    pub fn eval(self, v: f64) -> f64 {
        match self {
            Formula::Identity => v,
            Formula::Negated => -v,
            Formula::Power(a) if a.fract() == 0.0 && a.abs() < 64.0 => v.powi(a as i32),
            Formula::Power(a) => v.powf(a),
            Formula::Abs => v.abs(),
            Formula::AbsPower(a) => v.abs().powf(a),
            Formula::Call(k) => (v - k).max(0.0),
            Formula::Put(k) => (k - v).max(0.0),
            Formula::Exp(t) => (t * v).exp(),
            Formula::Clip(k) => v.clamp(-k, k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let cases = [
            ("S", 3.0, 3.0),
            ("-S", 3.0, -3.0),
            ("S^2", -3.0, 9.0),
            ("|S|", -3.0, 3.0),
            ("|S|^1.5", -4.0, 8.0),
            ("max(S-1,0)", 3.0, 2.0),
            ("max(S - 1, 0)", 0.0, 0.0),
            ("max(2-S,0)", -1.0, 3.0),
            ("exp(0.5*S)", 2.0, 1f64.exp()),
            ("min(max(S,-2),2)", -5.0, -2.0),
        ];
        for (text, v, want) in cases {
            assert_eq!(Formula::parse(text, "S").unwrap().eval(v), want, "{text}");
        }
        assert_eq!(Formula::parse("x^2", "x").unwrap().eval(3.0), 9.0);
    }

    #[test]
    fn rejects_unknown_forms() {
        for text in ["S^", "sin(S)", "x^2", "max(S-1,1)", "min(max(S,-1),2)", "S^inf"] {
            assert!(Formula::parse(text, "S").is_err(), "{text}");
        }
    }
}
