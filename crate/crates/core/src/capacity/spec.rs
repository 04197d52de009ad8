//! Window events described in configuration files.
//!
//! ```json
//! { "window": { "n": 1, "N": 2 }, "stat": "S", "threshold": "const 3", "side": ">=" }
//! ```
//!
//! `stat` is `S`, `-S` or `absS` (default `S`); `side` is one of `>=`, `>`,
//! `<=`, `<` (default `>=`). `threshold` is `const c`, `d_n`, `d_n scaled c`,
//! `a_n` or `a_n scaled c`, evaluated at each `m` in the window.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{window_max_event, Side, Stat, WindowMaxEvent};
use crate::error::{invalid, Error, Result};
use crate::lil::NormalizerSeries;
use crate::model::SequenceModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub n: usize,
    #[serde(rename = "N")]
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub window: WindowSpec,
    #[serde(default = "default_stat")]
    pub stat: Stat,
    pub threshold: Threshold,
    #[serde(default = "default_side")]
    pub side: Side,
}

fn default_stat() -> Stat {
    Stat::Sum
}

fn default_side() -> Side {
    Side::Ge
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Threshold {
    Const(f64),
    /// `c * d_m`.
    Dn(f64),
    /// `c * a_m`.
    An(f64),
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .ok_or_else(|| invalid(format!("bad number `{t}` in threshold `{s}`")))
        };
        match words.as_slice() {
            ["const", c] => Ok(Threshold::Const(num(c)?)),
            ["d_n"] => Ok(Threshold::Dn(1.0)),
            ["a_n"] => Ok(Threshold::An(1.0)),
            ["d_n", "scaled", c] => Ok(Threshold::Dn(num(c)?)),
            ["a_n", "scaled", c] => Ok(Threshold::An(num(c)?)),
            _ => Err(invalid(format!(
                "unknown threshold `{s}`; expected `const c`, `d_n [scaled c]` or `a_n [scaled c]`"
            ))),
        }
    }
}

impl TryFrom<String> for Threshold {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Threshold> for String {
    fn from(t: Threshold) -> String {
        match t {
            Threshold::Const(c) => format!("const {c}"),
            Threshold::Dn(c) => format!("d_n scaled {c}"),
            Threshold::An(c) => format!("a_n scaled {c}"),
        }
    }
}

impl EventSpec {
    pub fn build(&self, model: &SequenceModel) -> Result<WindowMaxEvent> {
        let (n, end) = (self.window.n, self.window.end);
        match self.threshold {
            Threshold::Const(c) => window_max_event(model, n, end, |_| c, self.side, self.stat),
            Threshold::Dn(c) => window_max_event(model, n, end, |m| c * crate::lil::d_n(m), self.side, self.stat),
            Threshold::An(c) => {
                let norm = NormalizerSeries::from_model(&model.with_horizon(end.min(model.horizon()).max(1))?)?;
                window_max_event(model, n, end, |m| c * norm.a(m), self.side, self.stat)
            }
        }
    }
}
