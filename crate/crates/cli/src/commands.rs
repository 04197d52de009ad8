//! One runner per command. Each returns the result table plus the report text
//! it needs; nothing touches the disk here.

use ambigil_core::bounds::{converse_rate_check, verify_domination, ConverseParams, DominationSpec};
use ambigil_core::capacity::mc::{mc_capacity_lower_bound, Strategy};
use ambigil_core::capacity::{bc_product_check, capacity_pair, draw_bc_family, StepEvent};
use ambigil_core::expectation::TerminalSum;
use ambigil_core::gnormal::{clt_capacity, GNormalParams};
use ambigil_core::lil::{
    check_conditions, cluster_probe, conjecture_probe, continuity_probe, lil_lower_grid, lil_upper_experiment,
    ConditionOptions, VerdictRule,
};
use ambigil_core::model::random::RandomModelSpec;
use ambigil_core::model::{SequenceModel, StepAmbiguity};
use ambigil_core::table::{num, Table};
use ambigil_core::Engine;
use serde::Serialize;

use crate::config::{
    BcParams, BoundsParams, CapacityParams, CommandKind, EvalParams, GnormalParams, LilParams, ProbeParams, RateParams,
    RunConfig,
};
use crate::error::{config_err, CliError};
use crate::payoff::Formula;

/// What a run produced, before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    /// Named results the formulas come from.
    pub anchors: Vec<&'static str>,
    pub summary: Vec<String>,
}

pub fn engine_for(cfg: &RunConfig) -> Engine {
    Engine { state_cap: cfg.state_cap, parallel: cfg.workers != 1 }
}

pub fn compute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let engine = engine_for(cfg);
    match cfg.command {
        CommandKind::Eval => eval(cfg, &engine),
        CommandKind::Capacity => capacity(cfg, &engine),
        CommandKind::BoundsVerify => bounds(cfg, &engine),
        CommandKind::Gnormal => gnormal(cfg, &engine),
        CommandKind::Lil => lil(cfg, &engine),
        CommandKind::Bc => bc(cfg, &engine),
        CommandKind::Probe => probe(cfg, &engine),
    }
}

const ENGINE_ANCHOR: &str =
    "Sub-linear expectation as the value of backward induction against an adapted choice of measure per step";
const CAPACITY_ANCHOR: &str = "Upper capacity V(A) = E~[1_A] and lower capacity v(A) = 1 - V(A^c)";

/// Serde name of a small enum, e.g. `>=` for `Side::Ge`.
fn label<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

fn iid_step(model: &SequenceModel, what: &str) -> Result<StepAmbiguity, CliError> {
    if !model.is_iid() {
        return Err(config_err(format!("{what} needs an i.i.d. model")));
    }
    Ok(model.step(0).clone())
}

fn eval(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    let p: EvalParams = cfg.params()?;
    let model = cfg.load_model()?;
    let f = Formula::parse(&p.payoff, "S")?;
    let payoff = TerminalSum::new(model.delta(), move |s| f.eval(s));
    let states = engine.estimate_states(&model, &payoff);
    let pair = engine.pair(&model, &payoff)?;
    let mut table = Table::new(&["payoff", "horizon", "lower", "upper", "states"]);
    table.push(vec![
        p.payoff.clone(),
        model.horizon().to_string(),
        num(pair.lower),
        num(pair.upper),
        states.to_string(),
    ]);
    Ok(Outcome {
        table,
        anchors: vec![ENGINE_ANCHOR, "Conjugate lower expectation E^[X] = -E~[-X]"],
        summary: vec![format!(
            "E^[{}] = {}, E~[{}] = {} over {} steps ({states} DP states)",
            p.payoff,
            num(pair.lower),
            p.payoff,
            num(pair.upper),
            model.horizon()
        )],
    })
}

fn capacity(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    let p: CapacityParams = cfg.params()?;
    let model = cfg.load_model()?;
    let mc = match &p.mc {
        Some(mc) => Some((mc.strategy.parse::<Strategy>()?, mc.replications, cfg.require_seed("Monte Carlo")?)),
        None => None,
    };
    let mut table = Table::new(&[
        "event",
        "n",
        "N",
        "stat",
        "side",
        "threshold",
        "lower",
        "upper",
        "mc_strategy",
        "mc_estimate",
        "mc_std_error",
        "mc_replications",
    ]);
    let mut summary = Vec::new();
    for (i, ev) in p.events.iter().enumerate() {
        let end = ev.window.end;
        if end == 0 || end > model.horizon() {
            return Err(config_err(format!(
                "event {i}: window end {end} is outside the model horizon {}",
                model.horizon()
            )));
        }
        let m = model.with_horizon(end)?;
        let event = ev.build(&m)?;
        let pair = capacity_pair(engine, &m, &event)?;
        let mut row = vec![
            i.to_string(),
            ev.window.n.to_string(),
            end.to_string(),
            label(&ev.stat),
            label(&ev.side),
            String::from(ev.threshold),
            num(pair.lower),
            num(pair.upper),
        ];
        match &mc {
            Some((strategy, reps, seed)) => {
                // Event i draws from its own seed so adding events leaves earlier rows unchanged.
                let est = mc_capacity_lower_bound(engine, &m, &event, strategy, *reps, seed.wrapping_add(i as u64))?;
                if est.estimate > pair.upper + 4.0 * est.std_error + 1e-12 {
                    summary.push(format!(
                        "event {i}: Monte Carlo estimate {} sits more than 4 standard errors above V = {}",
                        num(est.estimate),
                        num(pair.upper)
                    ));
                }
                let name = cfg.params.get("mc").and_then(|m| m.get("strategy")).and_then(|s| s.as_str());
                row.extend([
                    name.unwrap_or_default().to_string(),
                    num(est.estimate),
                    num(est.std_error),
                    est.replications.to_string(),
                ]);
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        table.push(row);
    }
    summary.insert(0, format!("{} window events evaluated exactly", p.events.len()));
    let mut anchors = vec![ENGINE_ANCHOR, CAPACITY_ANCHOR];
    if mc.is_some() {
        anchors.push("Any fixed measure-selection strategy gives a linear probability below V(A); its Monte Carlo estimate is a lower check");
    }
    Ok(Outcome { table, anchors, summary })
}

fn converse_params(p: &RateParams) -> ConverseParams {
    ConverseParams { z: p.z, gamma: p.gamma, alpha: p.alpha, slack: p.slack, normalizer: p.normalizer }
}

fn bounds(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    match cfg.tagged_params::<BoundsParams>("check", "domination")? {
        BoundsParams::Domination { cases, p_range, max_horizon, index_range, max_points, max_measures } => {
            let seed = cfg.require_seed("domination sweep")?;
            let spec = DominationSpec {
                models: RandomModelSpec {
                    max_horizon,
                    index_range,
                    max_points,
                    max_measures,
                    ..RandomModelSpec::default()
                },
                p_range,
            };
            let report = verify_domination(engine, &spec, cases, seed)?;
            let mut summary = vec![format!(
                "{cases} random cases (horizon up to {max_horizon}), {} with a violated inequality",
                report.violations.len()
            )];
            if !report.violations.is_empty() {
                summary.push(format!("violating case ids: {:?}", report.violations));
            }
            Ok(Outcome {
                table: report.table(),
                anchors: vec![
                    ENGINE_ANCHOR,
                    "Kolmogorov-type exponential maximal inequality under the upper and under the lower variance",
                    "Fuk-Nagaev-type maximal inequality mixing a p-th moment term with an exponential term",
                ],
                summary,
            })
        }
        BoundsParams::Converse(p) => {
            let model = cfg.load_model()?;
            let step = iid_step(&model, "the converse rate check")?;
            let family = |n: usize| SequenceModel::iid(step.clone(), n);
            let rows = converse_rate_check(engine, &family, &converse_params(&p), &p.n_list)?;
            let mut table =
                Table::new(&["n", "x_n", "s_n", "capacity", "lhs", "rhs", "alpha_n", "bounded", "violation"]);
            for r in &rows {
                table.push(vec![
                    r.n.to_string(),
                    num(r.x_n),
                    num(r.s_n),
                    num(r.capacity),
                    num(r.lhs),
                    num(r.rhs),
                    num(r.alpha_n),
                    r.bounded.to_string(),
                    r.violation.to_string(),
                ]);
            }
            let mut summary = vec![format!("{} rows at z = {}, gamma = {}", rows.len(), p.z, p.gamma)];
            if let Some(last) = rows.last() {
                summary.push(format!(
                    "last row: lhs = {} against rhs = {} with slack {}; {}",
                    num(last.lhs),
                    num(last.rhs),
                    p.slack,
                    if last.violation { "below the slack band" } else { "within the slack band" }
                ));
            }
            let unbounded = rows.iter().filter(|r| !r.bounded).count();
            if unbounded > 0 {
                summary.push(format!("{unbounded} rows have steps larger than the declared alpha bound"));
            }
            Ok(Outcome {
                table,
                anchors: vec![ENGINE_ANCHOR, "Converse exponential lower rate for bounded triangular arrays"],
                summary,
            })
        }
    }
}

fn gnormal(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    let p: GnormalParams = cfg.params()?;
    let g = GNormalParams::new(p.sigma_lo, p.sigma_hi)?;
    let closed =
        "Closed-form upper and lower tail capacities and density of the G-normal law N(0, [sigma_lo^2, sigma_hi^2])";
    if p.n.is_empty() {
        let mut table = Table::new(&["sigma_lo", "sigma_hi", "x", "upper_tail", "lower_tail", "density"]);
        for &x in &p.x {
            table.push(vec![
                num(p.sigma_lo),
                num(p.sigma_hi),
                num(x),
                num(g.upper_tail(x)),
                num(g.lower_tail(x)),
                num(g.density(x)),
            ]);
        }
        return Ok(Outcome {
            table,
            anchors: vec![closed],
            summary: vec![format!("{} points for sigma in [{}, {}]", p.x.len(), p.sigma_lo, p.sigma_hi)],
        });
    }
    let step = ambigil_core::model::make_rademacher_interval(p.sigma_lo, p.sigma_hi, p.grid)?;
    let mut table = Table::new(&["n", "x", "h", "dp_lower", "dp_upper", "mid", "indicator", "gnormal", "abs_error"]);
    let mut worst = 0.0f64;
    for &n in &p.n {
        for &x in &p.x {
            let r = clt_capacity(engine, &step, n, x, p.h)?;
            worst = worst.max(r.abs_error);
            table.push(vec![
                r.n.to_string(),
                num(r.x),
                num(r.h),
                num(r.dp_lower),
                num(r.dp_upper),
                num(r.mid),
                num(r.indicator),
                num(r.gnormal),
                num(r.abs_error),
            ]);
        }
    }
    Ok(Outcome {
        table,
        anchors: vec![
            ENGINE_ANCHOR,
            closed,
            "Lindeberg-type normal approximation under sub-linear expectations, bracketed by Lipschitz ramps",
        ],
        summary: vec![format!("largest |mid - G-normal tail| over the grid: {}", num(worst))],
    })
}

fn lil(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    let model = cfg.load_model()?;
    match cfg.tagged_params::<LilParams>("experiment", "conditions")? {
        LilParams::Conditions { checkpoints, p, alpha, d, eps, delta, wittmann_p, rule } => {
            let opts = ConditionOptions {
                p,
                alpha,
                d,
                eps,
                delta,
                wittmann_p,
                rule: rule.map(VerdictRule::from).unwrap_or_default(),
            };
            let report = check_conditions(&model, &checkpoints, &opts)?;
            let mut summary: Vec<String> =
                report.records.iter().map(|r| format!("{}: {} ({})", r.id, r.verdict.as_str(), r.details)).collect();
            let c = &report.remark_chain;
            summary.push(format!(
                "termwise tail chain: {} steps checked, {} outside its range, {} violations",
                c.checked,
                c.skipped,
                c.violations.len()
            ));
            summary.push(format!(
                "bounded-growth lower estimate for the variance series: {}",
                if report.growth.holds { "holds at every checkpoint" } else { "fails at some checkpoint" }
            ));
            summary.push(
                "verdicts describe trends over the last decade of checkpoints; a finite horizon cannot settle convergence"
                    .to_string(),
            );
            Ok(Outcome {
                table: report.table(),
                anchors: vec![
                    "Normalizers a_n = s_n sqrt(2 loglog s_n^2) and d_n = sqrt(2 n loglog n) with log x = ln max(e, x)",
                    "Sufficient conditions for the law of the iterated logarithm: tail-capacity series, truncated moment series and variance divergence",
                    "Wittmann-type moment series for non-identically distributed summands",
                ],
                summary,
            })
        }
        LilParams::Upper { windows, eps, center } => {
            let mut table = Table::new(&["n", "N", "eps", "center", "capacity", "bound", "blocks", "within_bound"]);
            let mut above = 0;
            for &(n, end) in &windows {
                for &e in &eps {
                    let r = lil_upper_experiment(engine, &model, n, end, e, center)?;
                    above += usize::from(!r.within_bound);
                    table.push(vec![
                        r.n.to_string(),
                        r.end.to_string(),
                        num(r.eps),
                        r.center.as_str().to_string(),
                        num(r.capacity),
                        num(r.bound),
                        r.blocks.to_string(),
                        r.within_bound.to_string(),
                    ]);
                }
            }
            let summary = vec![format!("{} windows, {above} with capacity above the blocked bound", table.len())];
            Ok(Outcome {
                table,
                anchors: vec![
                    ENGINE_ANCHOR,
                    "Upper half of the law of the iterated logarithm, checked on finite windows [n, N]",
                    "Kolmogorov-type exponential maximal inequality summed over dyadic blocks",
                ],
                summary,
            })
        }
        LilParams::Lower { n, end, eps } => {
            let mut table = Table::new(&["n", "N", "eps", "capacity"]);
            let mut violations = Vec::new();
            for &e in &eps {
                let grid = lil_lower_grid(engine, &model, &n, &end, e)?;
                for r in &grid.rows {
                    table.push(vec![r.n.to_string(), r.end.to_string(), num(r.eps), num(r.capacity)]);
                }
                violations.extend(grid.violations.iter().map(|&(a, b)| format!("eps {e}: (n, N) = ({a}, {b})")));
            }
            let mut summary = vec![format!("{} windows, {} decreases in N", table.len(), violations.len())];
            summary.extend(violations);
            Ok(Outcome {
                table,
                anchors: vec![
                    ENGINE_ANCHOR,
                    "Lower half of the law of the iterated logarithm, checked on finite windows [n, N]",
                ],
                summary,
            })
        }
    }
}

fn bc(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    let p: BcParams = cfg.params()?;
    let cases: Vec<(SequenceModel, Vec<StepEvent>)> = match &p.events {
        Some(events) => {
            let model = cfg.load_model()?;
            let events = events
                .iter()
                .map(|e| match e {
                    None => StepEvent::Never,
                    Some(s) => StepEvent::Threshold { side: s.side, value: s.value },
                })
                .collect();
            vec![(model, events)]
        }
        None => {
            let seed = cfg.require_seed("random event families")?;
            if p.max_horizon == 0 {
                return Err(config_err("max_horizon must be at least 1"));
            }
            (0..p.families).map(|i| draw_bc_family(seed, i, p.max_horizon)).collect()
        }
    };
    let mut table = Table::new(&[
        "family",
        "n",
        "exact_lower_of_intersection",
        "product_bound",
        "exp_bound",
        "exact_upper_of_union",
        "abs_gap",
    ]);
    let mut worst = 0.0f64;
    for (i, (model, events)) in cases.iter().enumerate() {
        let r = bc_product_check(engine, model, events)?;
        let gap = (r.exact_lower_of_intersection - r.product_bound).abs();
        worst = worst.max(gap);
        table.push(vec![
            i.to_string(),
            events.len().to_string(),
            num(r.exact_lower_of_intersection),
            num(r.product_bound),
            num(r.exp_bound),
            num(r.exact_upper_of_union),
            num(gap),
        ]);
    }
    Ok(Outcome {
        table,
        anchors: vec![
            ENGINE_ANCHOR,
            CAPACITY_ANCHOR,
            "Borel-Cantelli product identity v(intersection of complements) = product of (1 - V(A_i)) for independent single-coordinate events",
        ],
        summary: vec![format!("{} families, largest gap {}", cases.len(), num(worst))],
    })
}

fn probe(cfg: &RunConfig, engine: &Engine) -> Result<Outcome, CliError> {
    let model = cfg.load_model()?;
    let step = iid_step(&model, "probes")?;
    match cfg.tagged_params::<ProbeParams>("kind", "cluster")? {
        ProbeParams::Cluster { end, sigma } => {
            let sigma_hi = step.upper(|v| v * v).sqrt();
            let sigma = if sigma.is_empty() {
                [0.5, 0.75, 1.0, 1.25, 1.5].iter().map(|c| c * sigma_hi).collect()
            } else {
                sigma
            };
            let mut table = Table::new(&["N", "sigma", "upper", "lower"]);
            let mut breaks = 0;
            for &n in &end {
                let rows = cluster_probe(engine, &step, n, &sigma)?;
                for pair in rows.windows(2) {
                    if pair[0].sigma <= pair[1].sigma && pair[1].upper > pair[0].upper {
                        breaks += 1;
                    }
                }
                for r in rows {
                    table.push(vec![n.to_string(), num(r.sigma), num(r.upper), num(r.lower)]);
                }
            }
            Ok(Outcome {
                table,
                anchors: vec![
                    ENGINE_ANCHOR,
                    "Cluster set of S_n / d_n, replaced here by capacities of max over m <= N of S_m / d_m >= sigma",
                ],
                summary: vec![
                    format!("upper sigma = {}", num(sigma_hi)),
                    format!("{breaks} adjacent sigma pairs where V grows with sigma"),
                    "finite-window surrogates only; they describe no event at an infinite horizon".to_string(),
                ],
            })
        }
        ProbeParams::Continuity { phi, m, eps } => {
            let f = Formula::parse(&phi, "x")?;
            let r = continuity_probe(engine, &step, move |x| f.eval(x), m, eps)?;
            let mut table = Table::new(&[
                "upper_mean",
                "lower_mean",
                "upper_of_high_event",
                "upper_of_low_event",
                "lower_of_high_event",
                "lower_of_low_event",
            ]);
            table.push(vec![
                num(r.upper_mean),
                num(r.lower_mean),
                num(r.upper_of_high_event),
                num(r.upper_of_low_event),
                num(r.lower_of_high_event),
                num(r.lower_of_low_event),
            ]);
            Ok(Outcome {
                table,
                anchors: vec![
                    ENGINE_ANCHOR,
                    CAPACITY_ANCHOR,
                    "Capacity of the mean events S_m/m >= E~[phi] - eps and S_m/m <= E^[phi] + eps",
                ],
                summary: vec![format!("phi = {phi}, m = {m}, eps = {eps}")],
            })
        }
        ProbeParams::Conjecture(p) => {
            let family = |n: usize| SequenceModel::iid(step.clone(), n);
            let rows = conjecture_probe(engine, &family, &converse_params(&p), &p.n_list)?;
            let mut table = Table::new(&["n", "x_n", "s_lower", "capacity", "lhs", "target", "alpha_n", "bounded"]);
            for r in &rows {
                table.push(vec![
                    r.n.to_string(),
                    num(r.x_n),
                    num(r.s_lower),
                    num(r.capacity),
                    num(r.lhs),
                    num(r.target),
                    num(r.alpha_n),
                    r.bounded.to_string(),
                ]);
            }
            Ok(Outcome {
                table,
                anchors: vec![
                    ENGINE_ANCHOR,
                    "Conjectured converse rate for the lower capacity with s_n built from lower second moments",
                ],
                summary: vec![
                    format!("{} rows at z = {}, gamma = {}", rows.len(), p.z, p.gamma),
                    "numbers only: no row is read as evidence for or against the conjecture".to_string(),
                ],
            })
        }
    }
}
