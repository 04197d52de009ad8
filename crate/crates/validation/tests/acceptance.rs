//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use ambigil_cli::config::CommandKind;
use ambigil_cli::{execute, Common};
use ambigil_core::bounds::{converse_rate_check, verify_domination, ConverseParams, DominationSpec};
use ambigil_core::capacity::{bc_product_check, capacity_pair, draw_bc_family, window_max_event, Side, Stat};
use ambigil_core::expectation::reference::{replay, upper_over_paths, upper_over_strategies};
use ambigil_core::expectation::{Affine, Engine, FnPayoff, PathPayoff, SumOf, TerminalSum, Unsettled};
use ambigil_core::gnormal::{clt_capacity, std_normal_cdf, GNormalParams};
use ambigil_core::lil::{cluster_probe, continuity_probe, lil_lower_grid, lil_upper_experiment, Center};
use ambigil_core::model::random::{random_model, RandomModelSpec};
use ambigil_core::model::{make_rademacher_interval, LatticeSupport, SequenceModel, StepAmbiguity};
use ambigil_core::rng::{mix, SplitMix64};
use ambigil_validation::{coin_tail, terminal_mean, window_probability};
use serde_json::{json, Map, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type Scalar = (&'static str, fn(f64) -> f64);

const AUX: usize = 7;

/// Path-dependent payoff keyed on `(S_N, hash of the jumps)`, values in `[-3, 3)`.
fn hashed(key: u64) -> impl PathPayoff {
    FnPayoff::new(
        AUX,
        0,
        |_, aux, x, _| (aux * 5 + x.rem_euclid(5) as usize) % AUX,
        move |sum, aux| {
            let h = mix(key ^ mix(sum as u64 ^ ((aux as u64) << 40)));
            (h >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        },
    )
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget_s: u64) -> Result<(), String> {
    check(elapsed <= Duration::from_secs(budget_s), || {
        format!("took {:.1} s, budget {budget_s} s", elapsed.as_secs_f64())
    })
}

fn axioms() -> Outcome {
    let start = Instant::now();
    let e = Engine::default();
    let spec = RandomModelSpec { max_horizon: 6, max_measures: 4, ..RandomModelSpec::default() };
    let mut worst = 0.0f64;
    for i in 0..500u64 {
        let m = random_model(&mut SplitMix64::stream(1, i), &spec);
        let mut rng = SplitMix64::stream(2, i);
        let (x, y) = (hashed(rng.next_u64()), hashed(rng.next_u64()));
        let lambda = rng.uniform(0.0, 5.0);
        let c = rng.uniform(-4.0, 4.0);
        let up = |p: &dyn Fn(&Engine) -> ambigil_core::Result<f64>| p(&e).map_err(|err| format!("model {i}: {err}"));
        let ex = up(&|e| e.upper(&m, &x))?;
        let ey = up(&|e| e.upper(&m, &y))?;
        let gaps = [
            // x <= x + (y + 3) pointwise
            ex - up(&|e| e.upper(&m, &SumOf(&x, Affine { inner: &y, scale: 1.0, shift: 3.0 })))?,
            (up(&|e| e.upper(&m, &Affine { inner: &x, scale: 0.0, shift: c }))? - c).abs(),
            up(&|e| e.upper(&m, &SumOf(&x, &y)))? - ex - ey,
            (up(&|e| e.upper(&m, &Affine { inner: &x, scale: lambda, shift: 0.0 }))? - lambda * ex).abs(),
            (up(&|e| e.upper(&m, &Affine { inner: &x, scale: 1.0, shift: c }))? - ex - c).abs(),
        ];
        let names = ["monotonicity", "constants", "sub-additivity", "homogeneity", "translation"];
        for (g, name) in gaps.iter().zip(names) {
            worst = worst.max(*g);
            check(*g <= 1e-12, || format!("model {i}: {name} off by {g:e}"))?;
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("500 models, five properties, worst slack {worst:.1e}"))
}

fn brute_force() -> Outcome {
    let start = Instant::now();
    let e = Engine::default();
    let spec = RandomModelSpec { max_horizon: 8, max_measures: 4, ..RandomModelSpec::default() };
    let mut enumerated = 0;
    for i in 0..200u64 {
        let m = random_model(&mut SplitMix64::stream(3, i), &spec);
        let p = hashed(mix(i));
        let dp = e.upper(&m, &Unsettled(&p)).map_err(|err| err.to_string())?;
        let f = |path: &[i64]| replay(&p, path);
        let tree = upper_over_paths(&m, &f, 1 << 24).map_err(|err| format!("model {i}: {err}"))?;
        check(dp.to_bits() == tree.to_bits(), || format!("model {i}: DP {dp} vs tree {tree}"))?;
        if let Ok(v) = upper_over_strategies(&m, &f, 1 << 16) {
            enumerated += 1;
            check(dp.to_bits() == v.to_bits(), || format!("model {i}: DP {dp} vs strategy list {v}"))?;
        }
    }
    within(start.elapsed(), 120)?;
    Ok(format!(
        "200 models (N <= 8) equal the full history tree bitwise; {enumerated} small enough to list every strategy also equal"
    ))
}

fn linear_reduction() -> Outcome {
    let e = Engine::default();
    let spec = RandomModelSpec { max_measures: 1, max_horizon: 8, ..RandomModelSpec::default() };
    let tol = |t: f64| 1e-9 * t.abs().max(1.0);
    let mut events = 0;
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let m = random_model(&mut SplitMix64::stream(4, i), &spec);
        let d = m.delta();
        let fs: [Scalar; 4] = [("S", |s| s), ("S^2", |s| s * s), ("|S|", f64::abs), ("exp(S/4)", |s| (s / 4.0).exp())];
        for (name, f) in fs {
            let dp = e.pair(&m, &TerminalSum::new(d, f)).map_err(|err| err.to_string())?;
            let oracle = terminal_mean(&m, f);
            let gap = (dp.upper - oracle).abs().max((dp.lower - oracle).abs());
            worst = worst.max(gap);
            check(gap <= 1e-10 * oracle.abs().max(1.0), || format!("case {i}: E[{name}] {dp:?} vs {oracle}"))?;
        }
        let n_max = m.horizon();
        let radius: f64 = (0..n_max).map(|k| m.step(k).support().radius()).sum();
        let mut rng = SplitMix64::stream(5, i);
        for n in 1..=n_max {
            for end in n..=n_max {
                for stat in [Stat::Sum, Stat::AbsSum] {
                    for side in [Side::Ge, Side::Lt] {
                        for j in 0..4 {
                            let t = if j < 2 {
                                rng.int_inclusive(-(radius / d) as i64, (radius / d) as i64) as f64 * d
                            } else {
                                rng.uniform(-radius, radius)
                            };
                            let ev = window_max_event(&m, n, end, |_| t, side, stat).map_err(|err| err.to_string())?;
                            let pair = capacity_pair(&e, &m, &ev).map_err(|err| err.to_string())?;
                            let hit = |_: usize, s: f64| {
                                let v = if stat == Stat::AbsSum { s.abs() } else { s };
                                match side {
                                    Side::Ge => v >= t - tol(t),
                                    _ => v < t - tol(t),
                                }
                            };
                            let oracle = window_probability(&m, n, end, &hit);
                            let gap = (pair.upper - oracle).abs().max((pair.lower - oracle).abs());
                            worst = worst.max(gap);
                            events += 1;
                            check(gap <= 1e-10, || {
                                format!("case {i}: window [{n}, {end}] {stat:?} {side:?} {t}: {pair:?} vs {oracle}")
                            })?;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("50 single-measure models, {events} window events and 200 expectations, worst gap {worst:.1e}"))
}

fn gnormal_closed_forms() -> Outcome {
    let g = GNormalParams::new(1.0, 2.0).map_err(|e| e.to_string())?;
    check((g.upper_tail(0.0) - 2.0 / 3.0).abs() <= 1e-12, || format!("upper tail at 0: {}", g.upper_tail(0.0)))?;
    check((g.lower_tail(0.0) - 1.0 / 3.0).abs() <= 1e-12, || format!("lower tail at 0: {}", g.lower_tail(0.0)))?;
    for (x, want) in [(0.0, 0.5), (1.0, 0.8413447460685429), (-1.96, 0.024997895148220435)] {
        let got = std_normal_cdf(x);
        check((got - want).abs() <= 1e-10, || format!("Phi({x}) = {got}, want {want}"))?;
    }
    let mut worst = 0.0f64;
    for k in 0..100 {
        let x = -5.0 + 10.0 * k as f64 / 99.0;
        let gap = (g.lower_tail(x) - (1.0 - g.upper_tail(-x))).abs();
        worst = worst.max(gap);
        check(gap <= 1e-14, || format!("duality at {x} off by {gap:e}"))?;
    }
    Ok(format!("tails 2/3 and 1/3 at 0, Phi at three points, duality worst {worst:.1e} over 100 points"))
}

fn clt_bridge() -> Outcome {
    let start = Instant::now();
    let e = Engine::default();
    let step = make_rademacher_interval(1.0, 2.0, 2).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for x in [0.0, 0.5, 1.0] {
        let big = clt_capacity(&e, &step, 2000, x, None).map_err(|e| e.to_string())?;
        let small = clt_capacity(&e, &step, 500, x, None).map_err(|e| e.to_string())?;
        worst = worst.max(big.abs_error);
        check(big.abs_error <= 0.02, || format!("x = {x}: error {} at n = 2000", big.abs_error))?;
        check(big.abs_error <= small.abs_error, || {
            format!("x = {x}: error {} at n = 2000 above {} at n = 500", big.abs_error, small.abs_error)
        })?;
    }
    within(start.elapsed(), 300)?;
    Ok(format!("largest error at n = 2000 is {worst:.4}, each below its n = 500 value"))
}

fn domination() -> Outcome {
    let start = Instant::now();
    let report =
        verify_domination(&Engine::default(), &DominationSpec::default(), 1000, 20260101).map_err(|e| e.to_string())?;
    check(report.rows.iter().all(|r| r.n <= 10), || "a case exceeds horizon 10".to_string())?;
    check(report.violations.is_empty(), || format!("violations in cases {:?}", report.violations))?;
    within(start.elapsed(), 600)?;
    Ok("1000 random cases, no inequality violated".to_string())
}

fn converse_rate() -> Outcome {
    let coin = make_rademacher_interval(1.0, 1.0, 1).map_err(|e| e.to_string())?;
    let family = |n: usize| SequenceModel::iid(coin.clone(), n);
    let (z, gamma) = (0.1, 1.0);
    let rows = converse_rate_check(&Engine::default(), &family, &ConverseParams::new(z, gamma), &[256, 1024, 4096])
        .map_err(|e| e.to_string())?;
    let floor = -z * z * (1.0 + gamma) / 2.0 - 0.1;
    let lhs: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.lhs)).collect();
    for r in &rows {
        // Independent value of the capacity: exact binomial tail.
        let k = (z * r.s_n * r.x_n).ceil() as i64;
        let exact = coin_tail(r.n, k);
        check((r.capacity - exact).abs() <= 1e-10, || {
            format!("n = {}: capacity {} vs binomial {exact}", r.n, r.capacity)
        })?;
    }
    let rising = rows.windows(2).all(|w| w[1].lhs > w[0].lhs) && rows.iter().all(|r| r.lhs <= -z * z / 2.0);
    check(rising, || format!("lhs {lhs:?} does not rise toward {}", -z * z / 2.0))?;
    check(rows.iter().all(|r| r.lhs >= floor), || format!("lhs {lhs:?} below the required floor {floor:.2}"))?;
    Ok(format!("lhs {lhs:?} at or above {floor:.2}"))
}

fn borel_cantelli() -> Outcome {
    let e = Engine::default();
    let mut worst = 0.0f64;
    for id in 0..100 {
        let (m, events) = draw_bc_family(8, id, 10);
        let r = bc_product_check(&e, &m, &events).map_err(|e| e.to_string())?;
        let gap = (r.exact_lower_of_intersection - r.product_bound).abs();
        worst = worst.max(gap);
        check(gap <= 1e-12, || format!("family {id}: gap {gap:e}"))?;
    }
    let theta = StepAmbiguity::new(
        LatticeSupport::new(1.0, vec![-2, -1, 1, 2]).map_err(|e| e.to_string())?,
        vec![vec![0.0, 0.5, 0.5, 0.0], vec![0.5, 0.0, 0.0, 0.5]],
    )
    .map_err(|e| e.to_string())?;
    let r = continuity_probe(&e, &theta, |x| x * x, 3, 0.5).map_err(|e| e.to_string())?;
    let got = (r.upper_of_high_event, r.upper_of_low_event, r.lower_of_high_event, r.lower_of_low_event);
    check(got == (1.0, 1.0, 0.0, 0.0), || format!("continuity fixture gave {got:?}"))?;
    Ok(format!("100 families, worst gap {worst:.1e}; continuity fixture (1, 1, 0, 0)"))
}

fn lil_trends() -> Outcome {
    let start = Instant::now();
    let e = Engine::default();
    let coin = SequenceModel::iid(make_rademacher_interval(1.0, 1.0, 1).map_err(|e| e.to_string())?, 4096)
        .map_err(|e| e.to_string())?;
    let ends = [256, 512, 1024, 2048, 4096];
    let grid = lil_lower_grid(&e, &coin, &[16, 64, 256], &ends, 0.5).map_err(|e| e.to_string())?;
    check(grid.violations.is_empty(), || format!("lower values fall in N at {:?}", grid.violations))?;
    let windows = [(16, 256), (64, 1024), (1, 4096), (16, 4096), (256, 4096)];
    for (n, end) in windows {
        let r = lil_upper_experiment(&e, &coin, n, end, 1.0, Center::UpperMean).map_err(|e| e.to_string())?;
        check(r.within_bound, || format!("window [{n}, {end}]: capacity {} above bound {}", r.capacity, r.bound))?;
    }
    let step = make_rademacher_interval(1.0, 2.0, 2).map_err(|e| e.to_string())?;
    let sigma_hi = 2.0;
    for end in [16, 64, 256, 1024, 4096] {
        let rows = cluster_probe(&e, &step, end, &[0.5 * sigma_hi, 1.5 * sigma_hi]).map_err(|e| e.to_string())?;
        check(rows[1].upper <= rows[0].upper, || {
            format!("N = {end}: V at 1.5 is {} above V at 0.5 = {}", rows[1].upper, rows[0].upper)
        })?;
    }
    within(start.elapsed(), 900)?;
    Ok(format!(
        "{} lower windows nondecreasing in N, {} upper windows within the blocked bound, 5 threshold pairs ordered",
        grid.rows.len(),
        windows.len()
    ))
}

fn run_cli(kind: CommandKind, config: &Value, dir: &Path, workers: usize) -> Result<Vec<u8>, String> {
    let cfg = dir.join(format!("{}.json", kind.name()));
    std::fs::write(&cfg, config.to_string()).map_err(|e| e.to_string())?;
    let out = dir.join(format!("{}-{workers}", kind.name()));
    let common = Common {
        config: Some(cfg),
        out: out.clone(),
        seed: None,
        workers: Some(workers),
        state_cap: None,
        model: None,
    };
    let run = execute(kind, &common, Map::new()).map_err(|e| format!("{}: {e}", kind.name()))?;
    std::fs::read(run.csv).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let theta = json!({"rademacher": {"sigma_lo": 1, "sigma_hi": 2, "grid": 2}, "horizon": 64});
    let coin = json!({"rademacher": {"sigma_lo": 1, "sigma_hi": 1}, "horizon": 512});
    let runs = [
        (CommandKind::Eval, json!({"model": theta, "params": {"payoff": "|S|^3"}})),
        (
            CommandKind::Capacity,
            json!({"model": theta, "seed": 11, "params": {
                "events": [{"window": {"n": 8, "N": 64}, "threshold": "a_n scaled 0.8"},
                           {"window": {"n": 1, "N": 64}, "stat": "absS", "threshold": "const 20", "side": ">"}],
                "mc": {"strategy": "greedy-one-step", "replications": 4000}}}),
        ),
        (CommandKind::BoundsVerify, json!({"seed": 12, "params": {"check": "domination", "cases": 200}})),
        (CommandKind::Gnormal, json!({"params": {"sigma_lo": 1, "sigma_hi": 2, "x": [0, 0.5, 1], "n": [100, 400]}})),
        (
            CommandKind::Lil,
            json!({"model": coin, "params": {"experiment": "lower", "n": [4, 32], "N": [64, 256, 512], "eps": 0.5}}),
        ),
        (CommandKind::Bc, json!({"seed": 13, "params": {"families": 100}})),
        (CommandKind::Probe, json!({"model": theta, "params": {"kind": "cluster", "N": [16, 64]}})),
    ];
    for (kind, cfg) in &runs {
        let reference = run_cli(*kind, cfg, dir.path(), 1)?;
        for workers in [1, 2, 4, 0] {
            let again = run_cli(*kind, cfg, dir.path(), workers)?;
            check(again == reference, || format!("{}: CSV differs with {workers} workers", kind.name()))?;
        }
    }
    Ok(format!("{} commands, CSVs byte-identical across 1, 2, 4 and all workers and on rerun", runs.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("sub-linear axioms", axioms),
        ("DP equals brute force", brute_force),
        ("linear reduction", linear_reduction),
        ("G-normal closed forms", gnormal_closed_forms),
        ("lattice sums approach G-normal tails", clt_bridge),
        ("inequality domination", domination),
        ("converse rate band", converse_rate),
        ("Borel-Cantelli factorization", borel_cantelli),
        ("iterated-logarithm trend suite", lil_trends),
        ("determinism across worker counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} ({secs:.1} s)", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {reason} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
